// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { RatingSession } from "../src/state.js";
import { RatingView } from "../src/view.js";
import { FakeApi, FAKE_RUBRIC } from "./fake.js";

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 30));
}

describe("RatingView", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
  });

  async function mount(api: FakeApi, raterId = "r1") {
    const session = new RatingSession(api, raterId);
    new RatingView(root, session);
    await session.start();
    return session;
  }

  it("renders the rubric panel with exactly five entries", async () => {
    await mount(new FakeApi());
    const entries = root.querySelectorAll(".rubric li");
    expect(entries).toHaveLength(5);
    expect(entries[0].textContent).toBe(FAKE_RUBRIC[0]);
  });

  it("rating control admits only the five discrete values", async () => {
    await mount(new FakeApi());
    const buttons = [...root.querySelectorAll<HTMLButtonElement>("button.score")];
    expect(buttons.map((b) => b.textContent)).toEqual(["1", "2", "3", "4", "5"]);
  });

  it("submit stays disabled until a score is selected", async () => {
    await mount(new FakeApi());
    const submit = root.querySelector<HTMLButtonElement>("button.submit")!;
    expect(submit.disabled).toBe(true);
    root.querySelector<HTMLButtonElement>('button[data-score="4"]')!.click();
    await flush();
    expect(submit.disabled).toBe(false);
  });

  it("double-click on submit persists exactly one rating", async () => {
    const api = new FakeApi({ tasks: 2, submitDelayMs: 25 });
    await mount(api);
    root.querySelector<HTMLButtonElement>('button[data-score="3"]')!.click();
    await flush();
    const submit = root.querySelector<HTMLButtonElement>("button.submit")!;
    submit.click();
    submit.click();
    await flush();
    await flush();
    expect(api.submitCalls).toHaveLength(1);
  });

  it("keyboard keys 1-5 select a score", async () => {
    const session = await mount(new FakeApi());
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "5", bubbles: true }));
    expect(session.snapshot().selectedScore).toBe(5);
  });

  it("progress header mirrors the service counts", async () => {
    const api = new FakeApi({ tasks: 2 });
    await mount(api);
    root.querySelector<HTMLButtonElement>('button[data-score="2"]')!.click();
    root.querySelector<HTMLButtonElement>("button.submit")!.click();
    await flush();
    expect(root.querySelector(".progress")!.textContent).toBe("1 / 2");
  });

  it("service failure shows the retry banner and retry re-fetches", async () => {
    const api = new FakeApi({ tasks: 1, failNextTimes: 1 });
    await mount(api);
    const banner = root.querySelector(".banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(api.submitCalls).toHaveLength(0);
    root.querySelector<HTMLButtonElement>("button.retry")!.click();
    await flush();
    expect(root.querySelector(".task-card")).not.toBeNull();
  });

  it("shows the completion screen when all tasks are rated", async () => {
    const api = new FakeApi({ tasks: 1 });
    await mount(api);
    root.querySelector<HTMLButtonElement>('button[data-score="1"]')!.click();
    root.querySelector<HTMLButtonElement>("button.submit")!.click();
    await flush();
    expect(root.querySelector(".task-panel")!.textContent).toContain("All tasks rated");
  });
});
