/**
 * Teacher console: rubric editor (five descriptors per item, add/remove/
 * reorder, weights; every save is a new snapshot), course submissions,
 * and per-student activity with a class-average comparison chart.
 *
 * Chart bars are plain divs whose widths derive from the exact numbers
 * returned by the comparison endpoint; the values themselves are printed
 * next to the bars untouched.
 */

import { ApiError, ComparisonDoc, RubricHead, RubricItemDoc } from "../api.js";
import { clear, h } from "../dom.js";
import { formatDurationS, formatPercentage, statusLabel } from "../format.js";
import { Store } from "../state.js";

export interface TeacherContext {
  courseId: string;
}

interface EditorItem {
  item_id?: string;
  criterion: string;
  level_descriptors: string[];
  weight: number;
}

export function validateEditorItems(title: string, items: EditorItem[]): string[] {
  const errors: string[] = [];
  if (!title.trim()) errors.push("title must be non-empty");
  if (items.length === 0) errors.push("rubric must have at least one item");
  items.forEach((item, index) => {
    const where = `item ${index + 1}`;
    if (!item.criterion.trim()) errors.push(`${where}: criterion must be non-empty`);
    if (item.level_descriptors.length !== 5 ||
        item.level_descriptors.some((d) => !d.trim())) {
      errors.push(`${where}: item must have exactly 5 level descriptors`);
    }
    if (!(item.weight > 0)) errors.push(`${where}: weight must be > 0`);
  });
  return errors;
}

export function renderTeacherView(root: HTMLElement, store: Store, ctx: TeacherContext): void {
  clear(root);
  const rubricPane = h("div", { "data-testid": "rubric-pane" });
  const editorPane = h("div", { "data-testid": "editor-pane" });
  const submissionsPane = h("div", { "data-testid": "submissions-pane" });
  const analyticsPane = h("div", { "data-testid": "analytics-pane" });

  let editing: { rubricId: string | null; title: string; items: EditorItem[] } = {
    rubricId: null,
    title: "",
    items: [],
  };

  function blankItem(): EditorItem {
    return { criterion: "", level_descriptors: ["", "", "", "", ""], weight: 1.0 };
  }

  async function refreshRubrics(): Promise<void> {
    const { rubrics } = await store.api.listRubrics(ctx.courseId);
    renderRubricList(rubrics);
  }

  function renderRubricList(rubrics: RubricHead[]): void {
    clear(rubricPane);
    rubricPane.append(
      h("h3", {}, "Rubrics"),
      h("ul", { "data-testid": "rubric-list" },
        ...rubrics.map((head) =>
          h("li", { "data-rubric": head.rubric_id },
            `${head.title} (${head.current?.items.length ?? 0} items)`,
            h("button", {
              "data-testid": `edit-${head.rubric_id}`,
              onclick: () => {
                editing = {
                  rubricId: head.rubric_id,
                  title: head.title,
                  items: (head.current?.items ?? []).map((item: RubricItemDoc) => ({
                    item_id: item.item_id,
                    criterion: item.criterion,
                    level_descriptors: [...item.level_descriptors],
                    weight: item.weight,
                  })),
                };
                renderEditor();
              },
            }, "Edit"),
          ),
        ),
      ),
      h("button", {
        "data-testid": "new-rubric",
        onclick: () => {
          editing = { rubricId: null, title: "New rubric", items: [blankItem()] };
          renderEditor();
        },
      }, "New rubric"),
    );
  }

  function renderEditor(): void {
    clear(editorPane);
    const errorsBox = h("ul", { class: "errors", "data-testid": "editor-errors" });
    const titleInput = h("input", {
      type: "text", value: editing.title, "data-testid": "rubric-title",
    }) as HTMLInputElement;
    titleInput.value = editing.title;
    titleInput.addEventListener("input", () => (editing.title = titleInput.value));

    const itemsBox = h("div", {});
    editing.items.forEach((item, index) => {
      const criterion = h("input", { type: "text", "data-testid": `criterion-${index}` }) as HTMLInputElement;
      criterion.value = item.criterion;
      criterion.addEventListener("input", () => (item.criterion = criterion.value));
      const weight = h("input", { type: "number", step: "0.1", "data-testid": `weight-${index}` }) as HTMLInputElement;
      weight.value = String(item.weight);
      weight.addEventListener("input", () => (item.weight = Number(weight.value)));
      const descriptorInputs = item.level_descriptors.map((descriptor, level) => {
        const input = h("input", {
          type: "text", "data-testid": `descriptor-${index}-${level}`,
          placeholder: `level ${level + 1}`,
        }) as HTMLInputElement;
        input.value = descriptor;
        input.addEventListener("input", () => (item.level_descriptors[level] = input.value));
        return input;
      });
      itemsBox.append(
        h("fieldset", { "data-item-index": String(index) },
          h("legend", {}, `Item ${index + 1}`),
          h("label", {}, "Criterion ", criterion),
          h("label", {}, "Weight ", weight),
          h("div", { class: "descriptors" }, ...descriptorInputs),
          h("button", { "data-testid": `remove-item-${index}`, onclick: () => {
            editing.items.splice(index, 1);
            renderEditor();
          } }, "Remove item"),
          h("button", { "data-testid": `move-up-${index}`, onclick: () => {
            if (index > 0) {
              [editing.items[index - 1], editing.items[index]] =
                [editing.items[index], editing.items[index - 1]];
              renderEditor();
            }
          } }, "Move up"),
          // destroying a descriptor simulates an invalid rubric; validation
          // must catch it before any request is made
          h("button", { "data-testid": `drop-descriptor-${index}`, onclick: () => {
            item.level_descriptors.pop();
            renderEditor();
          } }, "Drop last descriptor"),
        ),
      );
    });

    editorPane.append(
      h("h3", {}, editing.rubricId ? "Edit rubric (saving creates a snapshot)" : "New rubric"),
      h("label", {}, "Title ", titleInput),
      itemsBox,
      h("button", { "data-testid": "add-item", onclick: () => {
        editing.items.push(blankItem());
        renderEditor();
      } }, "Add item"),
      h("button", { "data-testid": "save-rubric", onclick: () => void save() }, "Save"),
      errorsBox,
    );

    async function save(): Promise<void> {
      clear(errorsBox);
      const localErrors = validateEditorItems(editing.title, editing.items);
      if (localErrors.length > 0) {
        for (const error of localErrors) errorsBox.append(h("li", {}, error));
        return;
      }
      const body = {
        course_id: ctx.courseId,
        title: editing.title,
        locale_default: "es",
        items: editing.items.map((item) => ({
          item_id: item.item_id ?? "",
          criterion: item.criterion,
          level_descriptors: item.level_descriptors,
          weight: item.weight,
        })).map((item) => (item.item_id ? item : { ...item, item_id: undefined as any })),
      };
      try {
        if (editing.rubricId) {
          await store.api.updateRubric(editing.rubricId, body as any);
        } else {
          await store.api.createRubric(body as any);
        }
        clear(editorPane);
        await refreshRubrics();
      } catch (error) {
        const validation = error instanceof ApiError ? error.validationErrors : [];
        for (const line of validation.length ? validation : [(error as Error).message]) {
          errorsBox.append(h("li", {}, line));
        }
      }
    }
  }

  async function refreshSubmissions(): Promise<void> {
    const { submissions } = await store.api.listSubmissions(ctx.courseId);
    clear(submissionsPane);
    submissionsPane.append(
      h("h3", {}, "Course submissions"),
      h("ul", { "data-testid": "course-submissions" },
        ...submissions.map((submission) =>
          h("li", {},
            `${submission.job_id.slice(0, 8)} — ${statusLabel(submission.status)}` +
            (submission.summary ? ` — ${formatPercentage(submission.summary.percentage)}` : ""),
          ),
        ),
      ),
    );
  }

  function renderComparison(comparison: ComparisonDoc, studentId: string): void {
    clear(analyticsPane);
    const metrics: [string, number, number, (v: number) => string][] = [
      ["Logins", comparison.user.logins, comparison.class_mean.logins, String],
      ["Uploads", comparison.user.uploads, comparison.class_mean.uploads, String],
      ["Review sessions", comparison.user.review_sessions,
       comparison.class_mean.review_sessions, String],
      ["Review time", comparison.user.total_review_duration_s,
       comparison.class_mean.total_review_duration_s, formatDurationS],
    ];
    const maxValue = Math.max(1, ...metrics.flatMap(([, a, b]) => [a, b]));
    analyticsPane.append(
      h("h3", {}, `Activity: student vs class mean (${comparison.class_size} students)`),
      h("div", { class: "chart", "data-testid": "comparison-chart", "data-student": studentId },
        ...metrics.map(([label, user, mean, fmt]) =>
          h("div", { class: "metric" },
            h("span", { class: "metric-label" }, label),
            h("div", { class: "bar user", style: `width:${(user / maxValue) * 100}%` }),
            h("span", { "data-testid": `user-${label}` }, fmt(user)),
            h("div", { class: "bar mean", style: `width:${(mean / maxValue) * 100}%` }),
            h("span", { "data-testid": `mean-${label}` }, fmt(mean)),
          ),
        ),
      ),
    );
  }

  const studentIdInput = h("input", {
    type: "text", placeholder: "student id", "data-testid": "analytics-student-id",
  }) as HTMLInputElement;

  root.append(
    h("h2", {}, "Teacher dashboard"),
    rubricPane,
    editorPane,
    h("button", { "data-testid": "load-submissions", onclick: () => void refreshSubmissions() },
      "Load submissions"),
    submissionsPane,
    h("div", { class: "analytics-controls" },
      studentIdInput,
      h("button", { "data-testid": "load-comparison", onclick: () => {
        const studentId = studentIdInput.value.trim();
        if (!studentId) return;
        void store.api.courseComparison(ctx.courseId, studentId)
          .then((comparison) => renderComparison(comparison, studentId));
      } }, "Compare with class"),
    ),
    analyticsPane,
  );
  void refreshRubrics();
}
