/**
 * Admin console: batch sheet upload (students/courses/rubrics, CSV or
 * XLSX) with a per-row result table and a full-rollback banner when the
 * sheet fails validation.
 */

import { ImportReport } from "../api.js";
import { clear, h } from "../dom.js";
import { Store } from "../state.js";

export function renderAdminView(root: HTMLElement, store: Store): void {
  clear(root);
  const resultPane = h("div", { "data-testid": "import-result" });
  const kindSelect = h("select", { "data-testid": "kind-select" },
    h("option", { value: "students" }, "students"),
    h("option", { value: "courses" }, "courses"),
    h("option", { value: "rubrics" }, "rubrics"),
  ) as HTMLSelectElement;
  const fileInput = h("input", {
    type: "file", accept: ".csv,.xlsx", "data-testid": "sheet-input",
  }) as HTMLInputElement;

  function renderReport(report: ImportReport): void {
    clear(resultPane);
    if (!report.applied) {
      resultPane.append(
        h("div", { class: "banner rollback", "data-testid": "rollback-banner" },
          "Sheet rejected: nothing was imported. Fix the rows below and retry."),
      );
    } else {
      resultPane.append(
        h("p", { "data-testid": "import-summary" },
          `${report.created} created, ${report.updated} updated`),
      );
    }
    const rows = report.applied ? report.rows : report.errors;
    resultPane.append(
      h("table", { class: "import-rows", "data-testid": "import-rows" },
        h("thead", {}, h("tr", {},
          h("th", {}, "Row"),
          h("th", {}, report.applied ? "Action" : "Column"),
          h("th", {}, "Detail"))),
        h("tbody", {},
          ...rows.map((row: any) =>
            h("tr", { "data-row": String(row.row) },
              h("td", {}, String(row.row)),
              h("td", {}, report.applied ? row.action : row.column),
              h("td", {}, report.applied
                ? (row.email ?? row.course_code ?? row.rubric_title ?? "") +
                  (row.initial_password ? ` (initial password: ${row.initial_password})` : "")
                : row.message),
            ),
          ),
        ),
      ),
    );
  }

  root.append(
    h("h2", {}, "Administration"),
    h("div", { class: "import-box" },
      kindSelect,
      fileInput,
      h("button", { "data-testid": "import-button", onclick: () => {
        const file = fileInput.files?.[0];
        if (!file) return;
        void file.arrayBuffer().then(async (buffer) => {
          const report = await store.api.importSheet(
            new Uint8Array(buffer), file.name, kindSelect.value,
          );
          renderReport(report);
        });
      } }, "Import sheet"),
    ),
    resultPane,
  );
}
