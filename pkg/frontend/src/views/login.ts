/** Login form: one session model for all three role views. */

import { clear, h } from "../dom.js";
import { persistSession, Store } from "../state.js";

export function renderLoginView(root: HTMLElement, store: Store, onLogin: () => void): void {
  clear(root);
  const email = h("input", { type: "email", placeholder: "email", "data-testid": "email" }) as HTMLInputElement;
  const password = h("input", { type: "password", placeholder: "password", "data-testid": "password" }) as HTMLInputElement;
  const error = h("p", { class: "error", "data-testid": "login-error" });

  root.append(
    h("h2", {}, "Sign in"),
    h("form", {
      onsubmit: (event: Event) => {
        event.preventDefault();
        void (async () => {
          try {
            const result = await store.api.login(email.value, password.value);
            persistSession(result.user, result.token);
            store.update({ user: result.user });
            onLogin();
          } catch (err) {
            error.textContent = "Sign-in failed: check your email and password.";
          }
        })();
      },
    }, email, password, h("button", { type: "submit", "data-testid": "login-button" }, "Sign in")),
    error,
  );
}
