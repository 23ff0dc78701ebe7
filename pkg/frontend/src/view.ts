/**
 * DOM rendering for the rating session.
 *
 * Layout: a task card (case excerpt, model prediction, explanation), a
 * pinned rubric side panel, five score buttons (keyboard 1-5), and a
 * progress header.  The view is a pure projection of the session
 * snapshot; every interaction goes back through the session.
 */

import { RatingSession, SessionSnapshot, VALID_SCORES } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export class RatingView {
  private readonly progressEl: HTMLElement;
  private readonly taskPanel: HTMLElement;
  private readonly rubricList: HTMLOListElement;
  private readonly scoreButtons: HTMLButtonElement[] = [];
  private readonly submitButton: HTMLButtonElement;
  private readonly commentBox: HTMLTextAreaElement;
  private readonly banner: HTMLElement;
  private readonly retryButton: HTMLButtonElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly session: RatingSession,
  ) {
    const header = el("header", "topbar");
    header.append(el("h1", "", "Explanation rating"));
    this.progressEl = el("span", "progress", "0 / 0");
    header.append(this.progressEl);

    this.banner = el("div", "banner hidden");
    this.retryButton = el("button", "retry", "Retry");
    this.retryButton.addEventListener("click", () => {
      void this.session.fetchNext();
    });

    const layout = el("main", "layout");
    this.taskPanel = el("section", "task-panel");

    const side = el("aside", "rubric-panel");
    side.append(el("h2", "", "Rating rubric"));
    this.rubricList = el("ol", "rubric");
    side.append(this.rubricList);

    const controls = el("div", "controls");
    const scoreRow = el("div", "scores");
    for (const score of VALID_SCORES) {
      const button = el("button", "score", String(score));
      button.dataset.score = String(score);
      button.addEventListener("click", () => {
        this.session.select(score);
      });
      this.scoreButtons.push(button);
      scoreRow.append(button);
    }
    this.commentBox = el("textarea", "comment");
    this.commentBox.placeholder = "Optional comment";
    this.submitButton = el("button", "submit", "Submit rating");
    this.submitButton.addEventListener("click", () => {
      void this.submit();
    });
    controls.append(scoreRow, this.commentBox, this.submitButton);

    layout.append(this.taskPanel, side);
    this.root.replaceChildren(header, this.banner, layout, controls);

    document.addEventListener("keydown", (event) => {
      if (event.target instanceof HTMLTextAreaElement) {
        return;
      }
      if (/^[1-5]$/.test(event.key)) {
        this.session.select(Number(event.key));
      } else if (event.key === "Enter") {
        void this.submit();
      }
    });

    this.session.subscribe((snapshot) => {
      this.render(snapshot);
    });
  }

  private async submit(): Promise<void> {
    const comment = this.commentBox.value.trim();
    const accepted = await this.session.submit(comment || undefined);
    if (accepted) {
      this.commentBox.value = "";
    }
  }

  private render(snapshot: SessionSnapshot): void {
    this.progressEl.textContent = `${snapshot.progress.rated} / ${snapshot.progress.total}`;

    this.rubricList.replaceChildren(
      ...snapshot.rubric.map((entry) => el("li", "", entry)),
    );

    if (snapshot.error) {
      this.banner.classList.remove("hidden");
      this.banner.replaceChildren(
        el("span", "", snapshot.error),
        ...(snapshot.phase === "error" ? [this.retryButton] : []),
      );
    } else {
      this.banner.classList.add("hidden");
      this.banner.replaceChildren();
    }

    for (const button of this.scoreButtons) {
      const score = Number(button.dataset.score);
      button.disabled = snapshot.phase !== "task";
      button.classList.toggle("selected", snapshot.selectedScore === score);
    }
    this.submitButton.disabled =
      !(snapshot.phase === "task" && snapshot.selectedScore !== null);

    if (snapshot.phase === "done") {
      this.taskPanel.replaceChildren(
        el("h2", "", "All tasks rated"),
        el(
          "p",
          "",
          `You rated ${snapshot.progress.rated} of ${snapshot.progress.total} tasks. Thank you.`,
        ),
      );
      return;
    }
    if (snapshot.phase === "loading") {
      this.taskPanel.replaceChildren(el("p", "muted", "Loading next task..."));
      return;
    }
    if (snapshot.phase === "error") {
      this.taskPanel.replaceChildren(el("p", "muted", "Could not load a task."));
      return;
    }
    const task = snapshot.task;
    if (task === null) {
      return;
    }
    const card = el("article", "task-card");
    card.append(el("h2", "", `Case ${task.case_id}`));
    const excerpt = el("section", "excerpt");
    excerpt.append(el("h3", "", "Case excerpt"), el("p", "", task.case_excerpt));
    const prediction = el("section", "prediction");
    prediction.append(
      el("h3", "", "Model prediction"),
      el("p", "", String(task.predicted_label)),
    );
    const explanation = el("section", "explanation");
    explanation.append(
      el("h3", "", "Model explanation"),
      el("p", "", task.explanation),
    );
    card.append(excerpt, prediction, explanation);
    this.taskPanel.replaceChildren(card);
  }
}
