/**
 * Student dashboard: upload a deck, watch live progress, read bilingual
 * feedback with per-item scores, inspect extracted slide features, and
 * browse submission history (which drives review-session telemetry).
 */

import { FeaturesDoc, FeedbackResponse, Submission } from "../api.js";
import { clear, h } from "../dom.js";
import {
  PIPELINE_STATUSES,
  formatPercentage,
  formatPt,
  formatScore,
  statusLabel,
} from "../format.js";
import { Store } from "../state.js";
import { feedbackViewed } from "../telemetry.js";

export interface StudentContext {
  courseId: string;
  rubricId: string;
}

export function renderStudentView(root: HTMLElement, store: Store, ctx: StudentContext): void {
  clear(root);
  const progress = h("div", { class: "progress-row", "data-testid": "progress" });
  const message = h("p", { class: "muted", "data-testid": "message" });
  const feedbackPane = h("div", { "data-testid": "feedback-pane" });
  const featuresPane = h("div", { "data-testid": "features-pane" });
  const historyPane = h("div", { "data-testid": "history-pane" });

  const fileInput = h("input", { type: "file", accept: ".pptx", "data-testid": "file-input" }) as HTMLInputElement;
  const courseSelect = h("select", { "data-testid": "course-select" }) as HTMLSelectElement;
  const rubricSelect = h("select", { "data-testid": "rubric-select" }) as HTMLSelectElement;
  const uploadButton = h(
    "button",
    {
      "data-testid": "upload-button",
      onclick: () => {
        const file = fileInput.files?.[0];
        if (!file) {
          message.textContent = "Choose a .pptx file first.";
          return;
        }
        void file.arrayBuffer().then((buffer) =>
          startUpload(new Uint8Array(buffer), file.name),
        );
      },
    },
    "Upload presentation",
  );

  void store.api.listCourses().then(({ courses }) => {
    for (const course of courses) {
      courseSelect.append(h("option", { value: course.course_id }, course.title));
    }
    const fillRubrics = () => {
      rubricSelect.replaceChildren();
      const course = courses.find((c) => c.course_id === courseSelect.value);
      for (const rubric of course?.rubrics ?? []) {
        rubricSelect.append(h("option", { value: rubric.rubric_id }, rubric.title));
      }
      if (course) ctx.courseId = course.course_id;
      ctx.rubricId = rubricSelect.value || ctx.rubricId;
    };
    courseSelect.addEventListener("change", fillRubrics);
    rubricSelect.addEventListener("change", () => (ctx.rubricId = rubricSelect.value));
    if (ctx.courseId) courseSelect.value = ctx.courseId;
    fillRubrics();
  });

  function renderProgress(reached: string[], failed: boolean): void {
    clear(progress as HTMLElement);
    for (const status of PIPELINE_STATUSES) {
      const hit = reached.includes(status);
      progress.append(
        h(
          "span",
          {
            class: `badge ${hit ? "done" : "pending"}`,
            "data-status": status,
            "data-reached": hit ? "true" : "false",
          },
          statusLabel(status),
        ),
      );
    }
    if (failed) {
      progress.append(h("span", { class: "badge failed", "data-status": "FAILED" }, "Failed"));
    }
  }

  async function startUpload(bytes: Uint8Array, filename: string): Promise<void> {
    message.textContent = "Uploading…";
    clear(feedbackPane);
    clear(featuresPane);
    try {
      const { job_id, attached } = await store.api.submitDeck(
        bytes, filename, ctx.courseId, ctx.rubricId,
      );
      store.update({ activeJobId: job_id });
      message.textContent = attached
        ? "Identical upload already in progress; attached to it."
        : "Processing…";
      watchJob(job_id);
    } catch (error) {
      message.textContent = `Upload failed: ${(error as Error).message}`;
      (message as HTMLElement).dataset.error = "true";
    }
  }

  function watchJob(jobId: string): void {
    const reached: string[] = [];
    renderProgress(reached, false);
    const handle = store.api.watchProgress(jobId, (event) => {
      reached.push(event.status);
      renderProgress(reached, event.status === "FAILED");
      if (event.status === "COMPLETED") {
        message.textContent = "Evaluation complete.";
        void showFeedback(jobId);
        void showFeatures(jobId);
        void refreshHistory();
      } else if (event.status === "FAILED") {
        message.textContent = "Processing failed; see history for details.";
      }
    });
    handle.done.catch((error) => {
      message.textContent = `Progress stream error: ${(error as Error).message}`;
    });
  }

  async function showFeedback(jobId: string): Promise<void> {
    const feedback = await store.api.getFeedback(jobId);
    void feedbackViewed(store.api, jobId);
    renderFeedback(feedback);
  }

  function renderFeedback(feedback: FeedbackResponse): void {
    const locale = store.state.locale;
    const general = feedback.evaluation.general[locale];
    const summary = feedback.evaluation.summary;
    const criteria = new Map(
      (feedback.rubric_snapshot?.items ?? []).map((item) => [item.item_id, item.criterion]),
    );
    clear(feedbackPane);
    feedbackPane.append(
      h("h3", {}, "Feedback"),
      h(
        "p",
        { class: "score-line" },
        "Overall: ",
        h("strong", { "data-testid": "overall" }, formatScore(summary.overall_score)),
        " · ",
        h("strong", { "data-testid": "percentage" }, formatPercentage(summary.percentage)),
      ),
      h(
        "button",
        { "data-testid": "locale-toggle", onclick: () => {
          store.toggleLocale();
          renderFeedback(feedback);
        } },
        locale === "es" ? "Switch to English" : "Cambiar a español",
      ),
      h("section", { class: "general" },
        h("h4", {}, locale === "es" ? "Fortalezas" : "Strengths"),
        h("p", { "data-testid": "general-strengths" }, general.strengths),
        h("h4", {}, locale === "es" ? "Áreas de mejora" : "Areas for improvement"),
        h("p", { "data-testid": "general-improvements" }, general.improvements),
        h("h4", {}, locale === "es" ? "Acciones concretas" : "Concrete actions"),
        h("p", { "data-testid": "general-actions" }, general.actions),
      ),
      h("table", { class: "items", "data-testid": "item-table" },
        h("thead", {}, h("tr", {},
          h("th", {}, "Criterion"), h("th", {}, "Score"), h("th", {}, "Feedback"))),
        h("tbody", {},
          ...feedback.evaluation.items.map((item) =>
            h("tr", { "data-item": item.item_id },
              h("td", {}, criteria.get(item.item_id) ?? item.item_id),
              h("td", { class: "score", "data-testid": `score-${item.item_id}` },
                String(item.score)),
              h("td", {}, item.feedback[locale] ?? ""),
            ),
          ),
        ),
      ),
    );
  }

  async function showFeatures(jobId: string): Promise<void> {
    const features = await store.api.getFeatures(jobId);
    renderFeatures(features);
  }

  function renderFeatures(features: FeaturesDoc): void {
    clear(featuresPane);
    featuresPane.append(
      h("h3", {}, "Slide analysis"),
      h("p", { class: "muted" },
        `${features.totals.slide_count} slides · ${features.totals.word_total} words · ` +
        `${features.totals.image_total} images · ${features.totals.reference_total} references · ` +
        (features.all_slides_numbered ? "all slides numbered" : "not all slides numbered"),
      ),
      h("table", { class: "features", "data-testid": "features-table" },
        h("thead", {}, h("tr", {},
          h("th", {}, "#"), h("th", {}, "Words"), h("th", {}, "Font sizes"),
          h("th", {}, "Numbered"), h("th", {}, "Images"), h("th", {}, "Refs"))),
        h("tbody", {},
          ...features.per_slide.map((slide) =>
            h("tr", { "data-slide": String(slide.slide_index) },
              h("td", {}, String(slide.slide_index)),
              h("td", {}, String(slide.word_count)),
              h("td", {}, slide.word_count > 0
                ? `${formatPt(slide.min_font_size_pt)}–${formatPt(slide.max_font_size_pt)}`
                : "–"),
              h("td", {}, slide.has_slide_number ? "yes" : "no"),
              h("td", {}, slide.image_classes.join(", ") || "–"),
              h("td", {}, String(slide.reference_count)),
            ),
          ),
        ),
      ),
    );
  }

  async function refreshHistory(): Promise<void> {
    const { submissions } = await store.api.listSubmissions();
    renderHistory(submissions);
  }

  function renderHistory(submissions: Submission[]): void {
    clear(historyPane);
    historyPane.append(
      h("h3", {}, "Submission history"),
      h("ul", { "data-testid": "history-list" },
        ...submissions.map((submission) =>
          h("li", { "data-job": submission.job_id },
            `${new Date(submission.created_at * 1000).toISOString()} — ${statusLabel(submission.status)}`,
            submission.summary
              ? h("span", { class: "muted" },
                  ` (${formatPercentage(submission.summary.percentage)})`)
              : null,
            h("button", {
              "data-testid": `open-${submission.job_id}`,
              onclick: () => {
                void showFeedback(submission.job_id);
                void showFeatures(submission.job_id);
              },
            }, "View"),
          ),
        ),
      ),
    );
  }

  root.append(
    h("h2", {}, "Student dashboard"),
    h("div", { class: "upload-box" }, courseSelect, rubricSelect, fileInput, uploadButton),
    message,
    progress,
    feedbackPane,
    featuresPane,
    h("button", {
      "data-testid": "history-toggle",
      onclick: () => {
        if (store.telemetry.active) {
          void store.telemetry.close();
          clear(historyPane);
        } else {
          void store.telemetry.open();
          void refreshHistory();
        }
      },
    }, "Toggle history"),
    historyPane,
  );
}
