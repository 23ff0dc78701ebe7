/** Bootstrap: rater id entry, then the rating session. */

import { AnnotateApi } from "./api.js";
import { RatingSession } from "./state.js";
import { RatingView } from "./view.js";

function startSession(root: HTMLElement, raterId: string): void {
  const api = new AnnotateApi("");
  const session = new RatingSession(api, raterId);
  new RatingView(root, session);
  void session.start();
}

function renderLogin(root: HTMLElement): void {
  const form = document.createElement("form");
  form.className = "login";
  const label = document.createElement("label");
  label.textContent = "Rater id";
  const input = document.createElement("input");
  input.name = "rater_id";
  input.required = true;
  input.placeholder = "e.g. expert-07";
  const button = document.createElement("button");
  button.type = "submit";
  button.textContent = "Start rating";
  label.append(input);
  form.append(label, button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const raterId = input.value.trim();
    if (raterId) {
      startSession(root, raterId);
    }
  });
  root.replaceChildren(form);
}

const root = document.getElementById("app");
if (root) {
  renderLogin(root);
}
