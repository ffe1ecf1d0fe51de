/**
 * View state shared across dashboards. Everything here derives from API
 * responses; the store never computes scores or aggregates.
 */

import { ApiClient, SessionUser } from "./api.js";
import { HistoryTelemetry } from "./telemetry.js";

export type Locale = "es" | "en";

export interface ViewState {
  user: SessionUser | null;
  locale: Locale;
  activeJobId: string | null;
}

type Listener = (state: ViewState) => void;

export class Store {
  state: ViewState = { user: null, locale: "es", activeJobId: null };
  private listeners: Listener[] = [];

  constructor(
    public api: ApiClient,
    public telemetry: HistoryTelemetry,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of [...this.listeners]) listener(this.state);
  }

  roles(): string[] {
    return this.state.user?.roles ?? [];
  }

  defaultRoute(): string {
    const roles = this.roles();
    if (roles.includes("admin")) return "#/admin";
    if (roles.includes("teacher")) return "#/teacher";
    if (roles.includes("student")) return "#/student";
    return "#/login";
  }

  toggleLocale(): void {
    this.update({ locale: this.state.locale === "es" ? "en" : "es" });
  }
}

const SESSION_KEY = "slidegrade.session";

export function persistSession(user: SessionUser, token: string): void {
  localStorage.setItem(SESSION_KEY, JSON.stringify({ user, token }));
}

export function restoreSession(): { user: SessionUser; token: string } | null {
  const raw = localStorage.getItem(SESSION_KEY);
  if (!raw) return null;
  try {
    return JSON.parse(raw);
  } catch {
    return null;
  }
}

export function clearSession(): void {
  localStorage.removeItem(SESSION_KEY);
}
