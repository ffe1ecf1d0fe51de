/**
 * SPA bootstrap: hash router with role-based routes over one session.
 *
 * The API base URL comes from `window.SLIDEGRADE_API_BASE` (empty string
 * means same origin, the default when api-service serves the built
 * assets). Student routes need a course and rubric to submit against;
 * they are picked through `#/student/<course_id>/<rubric_id>` or fall
 * back to the first rubric the API reports.
 */

import { ApiClient } from "./api.js";
import { clear, h } from "./dom.js";
import { clearSession, restoreSession, Store } from "./state.js";
import { HistoryTelemetry } from "./telemetry.js";
import { renderAdminView } from "./views/admin.js";
import { renderLoginView } from "./views/login.js";
import { renderStudentView } from "./views/student.js";
import { renderTeacherView } from "./views/teacher.js";

declare global {
  interface Window {
    SLIDEGRADE_API_BASE?: string;
  }
}

export function createApp(root: HTMLElement, baseUrl?: string): Store {
  const api = new ApiClient(baseUrl ?? window.SLIDEGRADE_API_BASE ?? "");
  const store = new Store(api, new HistoryTelemetry(api));

  const saved = restoreSession();
  if (saved) {
    api.token = saved.token;
    store.state = { ...store.state, user: saved.user };
  }

  const header = h("header", {},
    h("h1", {}, "slidegrade"),
    h("nav", { "data-testid": "nav" }),
    h("span", { "data-testid": "whoami", class: "muted" }),
    h("button", { "data-testid": "logout", onclick: () => {
      void store.api.logout().catch(() => undefined);
      clearSession();
      store.update({ user: null });
      window.location.hash = "#/login";
    } }, "Sign out"),
  );
  const main = h("main", {});
  clear(root).append(header, main);

  function renderNav(): void {
    const nav = header.querySelector("nav")!;
    nav.replaceChildren();
    const roles = store.roles();
    const links: [string, string][] = [];
    if (roles.includes("student")) links.push(["#/student", "Student"]);
    if (roles.includes("teacher")) links.push(["#/teacher", "Teacher"]);
    if (roles.includes("admin")) links.push(["#/admin", "Admin"]);
    for (const [href, label] of links) {
      nav.append(h("a", { href }, label));
    }
    header.querySelector('[data-testid="whoami"]')!.textContent =
      store.state.user ? `${store.state.user.display_name}` : "";
  }

  async function route(): Promise<void> {
    renderNav();
    const hash = window.location.hash || store.defaultRoute();
    const [path, courseId, rubricId] = hash.replace(/^#\//, "").split("/");
    if (!store.state.user || path === "login") {
      renderLoginView(main, store, () => {
        window.location.hash = store.defaultRoute();
        void route();
      });
      return;
    }
    if (path === "teacher" && store.roles().includes("teacher")) {
      const cid = courseId || (await firstTeacherCourse());
      renderTeacherView(main, store, { courseId: cid });
      return;
    }
    if (path === "admin" && store.roles().includes("admin")) {
      renderAdminView(main, store);
      return;
    }
    if (store.roles().includes("student")) {
      let course = courseId;
      let rubric = rubricId;
      if (!course || !rubric) {
        const picked = await firstStudentTarget();
        course = course || picked.courseId;
        rubric = rubric || picked.rubricId;
      }
      renderStudentView(main, store, { courseId: course, rubricId: rubric });
      return;
    }
    clear(main).append(h("p", {}, "No dashboard available for your roles."));
  }

  async function firstTeacherCourse(): Promise<string> {
    const { courses } = await store.api.listCourses();
    return courses[0]?.course_id ?? "";
  }

  async function firstStudentTarget(): Promise<{ courseId: string; rubricId: string }> {
    const { courses } = await store.api.listCourses();
    const withRubric = courses.find((course) => course.rubrics.length > 0) ?? courses[0];
    return {
      courseId: withRubric?.course_id ?? "",
      rubricId: withRubric?.rubrics[0]?.rubric_id ?? "",
    };
  }

  window.addEventListener("hashchange", () => void route());
  void route();
  return store;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  createApp(document.getElementById("app")!);
}
