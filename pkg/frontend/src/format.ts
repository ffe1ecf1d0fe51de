/**
 * Display formatting only. The UI never computes scores: every number
 * shown comes straight from an API payload, fixed to two decimals here.
 */

export function formatScore(value: number): string {
  return value.toFixed(2);
}

export function formatPercentage(value: number): string {
  return `${value.toFixed(2)}%`;
}

export function formatDurationS(seconds: number): string {
  if (seconds < 60) return `${Math.round(seconds)}s`;
  const minutes = Math.floor(seconds / 60);
  const rest = Math.round(seconds % 60);
  return `${minutes}m ${rest}s`;
}

export function formatPt(value: number): string {
  return `${Number.isInteger(value) ? value : value.toFixed(1)}pt`;
}

export const STATUS_LABELS: Record<string, string> = {
  QUEUED: "Queued",
  EXTRACTING: "Extracting features",
  EVALUATING: "Evaluating",
  PERSISTING: "Saving results",
  COMPLETED: "Completed",
  FAILED: "Failed",
};

export const PIPELINE_STATUSES = [
  "QUEUED",
  "EXTRACTING",
  "EVALUATING",
  "PERSISTING",
  "COMPLETED",
] as const;

export function statusLabel(status: string): string {
  return STATUS_LABELS[status] ?? status;
}
