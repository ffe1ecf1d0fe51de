/**
 * Typed client for the slidegrade REST/SSE API.
 *
 * Uploads build the multipart body by hand (boundary + raw bytes) so the
 * client behaves identically in browsers and node test environments.
 */

import { streamSse, SseHandle } from "./sse.js";

export interface SessionUser {
  user_id: string;
  email: string;
  display_name: string;
  roles: string[];
}

export interface LoginResult {
  token: string;
  user: SessionUser;
}

export interface ProgressEvent {
  status: string;
  timestamp: number;
}

export interface Submission {
  job_id: string;
  course_id: string;
  rubric_id: string;
  status: string;
  created_at: number;
  updated_at: number;
  error: { code: string; message: string } | null;
  summary?: ScoreSummaryDoc;
  progress_events?: ProgressEvent[];
}

export interface ScoreSummaryDoc {
  item_scores: Record<string, number>;
  overall_score: number;
  percentage: number;
}

export interface GeneralFeedback {
  strengths: string;
  improvements: string;
  actions: string;
}

export interface EvaluationDoc {
  items: { item_id: string; score: number; feedback: Record<string, string> }[];
  general: Record<string, GeneralFeedback>;
  summary: ScoreSummaryDoc;
  provider_meta: Record<string, unknown>;
}

export interface RubricItemDoc {
  item_id: string;
  criterion: string;
  level_descriptors: string[];
  weight: number;
}

export interface RubricDoc {
  rubric_id?: string;
  title: string;
  locale_default: string;
  items: RubricItemDoc[];
}

export interface FeedbackResponse {
  job_id: string;
  status: string;
  evaluation: EvaluationDoc;
  rubric_snapshot: RubricDoc | null;
  rubric_snapshot_id: string;
}

export interface SlideFeaturesDoc {
  slide_index: number;
  word_count: number;
  min_font_size_pt: number;
  max_font_size_pt: number;
  fonts_used: string[];
  has_slide_number: boolean;
  image_classes: string[];
  reference_count: number;
}

export interface FeaturesDoc {
  features_schema: number;
  totals: {
    word_total: number;
    slide_count: number;
    image_total: number;
    reference_total: number;
  };
  all_slides_numbered: boolean;
  per_slide: SlideFeaturesDoc[];
  references: { slide_index: number; raw_text: string; kind: string }[];
}

export interface SessionStatsDoc {
  logins: number;
  uploads: number;
  review_sessions: number;
  total_review_duration_s: number;
}

export interface ComparisonDoc {
  user: SessionStatsDoc;
  class_mean: SessionStatsDoc;
  class_size: number;
}

export interface ImportReport {
  kind: string;
  applied: boolean;
  created: number;
  updated: number;
  errors: { row: number; column: string; message: string }[];
  rows: Record<string, unknown>[];
}

export interface CourseInfo {
  course_id: string;
  course_code: string;
  title: string;
  rubrics: { rubric_id: string; title: string }[];
}

export interface RubricHead {
  rubric_id: string;
  course_id: string;
  title: string;
  locale_default: string;
  current_snapshot_id: string;
  current: RubricDoc | null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public validationErrors: string[] = [],
  ) {
    super(message);
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(public baseUrl: string = "") {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const headers: Record<string, string> = { ...extra };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(method: string, path: string, init: RequestInit = {}): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      ...init,
      headers: { ...this.headers(), ...(init.headers as Record<string, string> | undefined) },
    });
    if (response.status === 204) return undefined as T;
    const text = await response.text();
    let body: any = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = null;
    }
    if (!response.ok) {
      throw new ApiError(
        response.status,
        body?.error ?? `http_${response.status}`,
        body?.message ?? text ?? response.statusText,
        body?.validation_errors ?? [],
      );
    }
    return body as T;
  }

  async login(email: string, password: string): Promise<LoginResult> {
    const result = await this.request<LoginResult>("POST", "/api/auth/login", {
      body: JSON.stringify({ email, password }),
      headers: { "Content-Type": "application/json" },
    });
    this.token = result.token;
    return result;
  }

  async logout(): Promise<void> {
    await this.request<void>("POST", "/api/auth/logout");
    this.token = null;
  }

  async submitDeck(
    bytes: Uint8Array,
    filename: string,
    courseId: string,
    rubricId: string,
  ): Promise<{ job_id: string; attached: boolean }> {
    const boundary = `----slidegrade${Math.random().toString(36).slice(2)}`;
    const encoder = new TextEncoder();
    const parts: Uint8Array[] = [];
    const field = (name: string, value: string) =>
      parts.push(
        encoder.encode(
          `--${boundary}\r\nContent-Disposition: form-data; name="${name}"\r\n\r\n${value}\r\n`,
        ),
      );
    field("course_id", courseId);
    field("rubric_id", rubricId);
    parts.push(
      encoder.encode(
        `--${boundary}\r\nContent-Disposition: form-data; name="file"; filename="${filename}"\r\n` +
          `Content-Type: application/octet-stream\r\n\r\n`,
      ),
    );
    parts.push(bytes);
    parts.push(encoder.encode(`\r\n--${boundary}--\r\n`));
    const total = parts.reduce((n, p) => n + p.length, 0);
    const body = new Uint8Array(total);
    let offset = 0;
    for (const part of parts) {
      body.set(part, offset);
      offset += part.length;
    }
    return this.request("POST", "/api/submissions", {
      body,
      headers: { "Content-Type": `multipart/form-data; boundary=${boundary}` },
    });
  }

  listCourses(): Promise<{ courses: CourseInfo[] }> {
    return this.request("GET", "/api/courses");
  }

  listSubmissions(courseId?: string): Promise<{ submissions: Submission[] }> {
    const query = courseId ? `?course_id=${encodeURIComponent(courseId)}` : "";
    return this.request("GET", `/api/submissions${query}`);
  }

  getSubmission(jobId: string): Promise<Submission> {
    return this.request("GET", `/api/submissions/${jobId}`);
  }

  getFeedback(jobId: string): Promise<FeedbackResponse> {
    return this.request("GET", `/api/submissions/${jobId}/feedback`);
  }

  getFeatures(jobId: string): Promise<FeaturesDoc> {
    return this.request("GET", `/api/submissions/${jobId}/features`);
  }

  watchProgress(jobId: string, onEvent: (event: ProgressEvent) => void): SseHandle {
    return streamSse(
      `${this.baseUrl}/api/submissions/${jobId}/events`,
      this.headers(),
      (message) => onEvent(JSON.parse(message.data) as ProgressEvent),
    );
  }

  listRubrics(courseId?: string): Promise<{ rubrics: RubricHead[] }> {
    const query = courseId ? `?course_id=${encodeURIComponent(courseId)}` : "";
    return this.request("GET", `/api/rubrics${query}`);
  }

  createRubric(body: RubricDoc & { course_id: string }): Promise<{ rubric_id: string; snapshot_id: string }> {
    return this.request("POST", "/api/rubrics", {
      body: JSON.stringify(body),
      headers: { "Content-Type": "application/json" },
    });
  }

  updateRubric(
    rubricId: string,
    body: RubricDoc & { course_id: string },
  ): Promise<{ rubric_id: string; snapshot_id: string }> {
    return this.request("PUT", `/api/rubrics/${rubricId}`, {
      body: JSON.stringify(body),
      headers: { "Content-Type": "application/json" },
    });
  }

  studentAnalytics(studentId: string): Promise<{ user_id: string; stats: SessionStatsDoc }> {
    return this.request("GET", `/api/analytics/students/${studentId}`);
  }

  courseComparison(courseId: string, userId: string): Promise<ComparisonDoc> {
    return this.request(
      "GET",
      `/api/analytics/course/${courseId}/comparison?user_id=${encodeURIComponent(userId)}`,
    );
  }

  async importSheet(bytes: Uint8Array, filename: string, kind: string): Promise<ImportReport> {
    const boundary = `----slidegrade${Math.random().toString(36).slice(2)}`;
    const encoder = new TextEncoder();
    const head = encoder.encode(
      `--${boundary}\r\nContent-Disposition: form-data; name="kind"\r\n\r\n${kind}\r\n` +
        `--${boundary}\r\nContent-Disposition: form-data; name="file"; filename="${filename}"\r\n` +
        `Content-Type: application/octet-stream\r\n\r\n`,
    );
    const tail = encoder.encode(`\r\n--${boundary}--\r\n`);
    const body = new Uint8Array(head.length + bytes.length + tail.length);
    body.set(head, 0);
    body.set(bytes, head.length);
    body.set(tail, head.length + bytes.length);
    return this.request("POST", "/api/admin/import", {
      body,
      headers: { "Content-Type": `multipart/form-data; boundary=${boundary}` },
    });
  }

  postEvent(kind: string, jobId?: string, courseId?: string): Promise<void> {
    return this.request("POST", "/api/events", {
      body: JSON.stringify({ kind, job_id: jobId ?? null, course_id: courseId ?? null }),
      headers: { "Content-Type": "application/json" },
    });
  }
}
