// @vitest-environment jsdom
//
// Round trip against the live annotation service: two simulated raters
// work through 50 tasks each via the real DOM view, then the export is
// checked against the ledger.
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotateApi, ApiError } from "../src/api.js";
import { RatingSession } from "../src/state.js";
import { RatingView } from "../src/view.js";

const PORT = 8900 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
const fetchImpl: typeof fetch = (input, init) => fetch(input, init);

const SETUP_STORE = `
import sys
from jurispipe.annotate import AnnotationStore, create_tasks
from jurispipe.records import PredictionRecord

root = sys.argv[1]
run = [
    PredictionRecord(
        case_id=f"case{i:05d}",
        predicted=i % 2,
        raw_output="",
        prompt_digest=f"d{i}",
        explanation=f"model explanation for case {i}",
    )
    for i in range(60)
]
texts = {f"case{i:05d}": f"case text body {i} " * 20 for i in range(60)}
tasks = create_tasks(run, sample=50, seed=13, case_texts=texts)
AnnotationStore(root).add_tasks(tasks)
print("store ready")
`;

let server: ChildProcess | null = null;
let workdir = "";

async function waitForHealth(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetchImpl(`${BASE}/api/health`);
      if (response.ok) {
        return;
      }
    } catch {
      // server not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("annotation service did not become healthy");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "rater-ui-"));
  const storeDir = join(workdir, "store");
  const setup = spawnSync("python3", ["-c", SETUP_STORE, storeDir], {
    encoding: "utf-8",
  });
  if (setup.status !== 0) {
    throw new Error(`store setup failed: ${setup.stderr}`);
  }
  server = spawn(
    "python3",
    [
      "-m",
      "jurispipe.cli",
      "-o",
      join(workdir, "runs"),
      "annotate-serve",
      "--store",
      storeDir,
      "--port",
      String(PORT),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForHealth();
}, 30000);

afterAll(() => {
  if (server) {
    server.kill();
  }
  if (workdir) {
    rmSync(workdir, { recursive: true, force: true });
  }
});

interface Rater {
  id: string;
  session: RatingSession;
  root: HTMLElement;
  submitted: number[];
}

function mountRater(id: string): Rater {
  const root = document.createElement("div");
  document.body.append(root);
  const api = new AnnotateApi(BASE, fetchImpl);
  const session = new RatingSession(api, id);
  new RatingView(root, session);
  return { id, session, root, submitted: [] };
}

async function waitFor(
  predicate: () => boolean,
  what: string,
  timeoutMs = 10000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) {
      return;
    }
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
  throw new Error(`timed out waiting for ${what}`);
}

async function rateOne(rater: Rater, score: number): Promise<void> {
  const button = rater.root.querySelector<HTMLButtonElement>(
    `button[data-score="${score}"]`,
  );
  if (!button) {
    throw new Error("score button missing");
  }
  button.click();
  await waitFor(
    () => rater.session.snapshot().selectedScore === score,
    "score selection",
  );
  const before = rater.session.snapshot().progress.rated;
  rater.root.querySelector<HTMLButtonElement>("button.submit")!.click();
  await waitFor(() => {
    const snap = rater.session.snapshot();
    return snap.progress.rated === before + 1 || snap.error !== null;
  }, "submission ack");
  const snap = rater.session.snapshot();
  if (snap.error) {
    throw new Error(`submission failed: ${snap.error}`);
  }
  rater.submitted.push(score);
}

describe("annotation round trip against the live service", () => {
  it("two raters rate 50 tasks each through the UI; export matches", async () => {
    const raters = [mountRater("expert-a"), mountRater("expert-b")];
    for (const rater of raters) {
      await rater.session.start();
      await waitFor(
        () => rater.session.snapshot().phase === "task",
        `first task for ${rater.id}`,
      );
    }

    // interleave the two raters until both reach the done screen
    let turn = 0;
    while (raters.some((r) => r.session.snapshot().phase !== "done")) {
      const rater = raters[turn % 2];
      turn += 1;
      if (rater.session.snapshot().phase !== "task") {
        continue;
      }
      const score = (rater.submitted.length % 5) + 1;
      await rateOne(rater, score);
    }

    for (const rater of raters) {
      expect(rater.submitted).toHaveLength(50);
      expect(rater.session.snapshot().progress).toEqual({ rated: 50, total: 50 });
      expect(rater.root.querySelector(".task-panel")!.textContent).toContain(
        "All tasks rated",
      );
    }

    const api = new AnnotateApi(BASE, fetchImpl);
    const exported = await api.export();

    // exactly 100 ratings, every score in 1..5
    expect(exported.ratings).toHaveLength(100);
    for (const rating of exported.ratings) {
      expect(rating.score).toBeGreaterThanOrEqual(1);
      expect(rating.score).toBeLessThanOrEqual(5);
    }

    // histogram matches the ledger rows exactly
    const tally: Record<string, number> = { 1: 0, 2: 0, 3: 0, 4: 0, 5: 0 };
    for (const rating of exported.ratings) {
      tally[String(rating.score)] += 1;
    }
    const dist = exported.distribution.model;
    expect(dist.n).toBe(100);
    expect(dist.distribution).toEqual(tally);

    // and matches what the two simulated raters actually submitted
    const submittedTally: Record<string, number> = { 1: 0, 2: 0, 3: 0, 4: 0, 5: 0 };
    for (const rater of raters) {
      for (const score of rater.submitted) {
        submittedTally[String(score)] += 1;
      }
    }
    expect(dist.distribution).toEqual(submittedTally);

    // duplicate submission for an already-rated task is rejected
    const next = await api.next("expert-a");
    expect(next.done).toBe(true);
    let rejected: ApiError | null = null;
    try {
      await api.submitRating({
        task_id: (await firstTaskId()),
        rater_id: "expert-a",
        score: 3,
      });
    } catch (err) {
      rejected = err as ApiError;
    }
    expect(rejected).not.toBeNull();
    expect(rejected!.status).toBe(409);

    // the rejection did not grow the ledger
    const after = await api.export();
    expect(after.ratings).toHaveLength(100);
  }, 120000);
});

async function firstTaskId(): Promise<string> {
  // a fresh rater sees the first task in stable order
  const api = new AnnotateApi(BASE, fetchImpl);
  await api.register("probe");
  const view = await api.next("probe");
  if (view.done) {
    throw new Error("expected an open task for a fresh rater");
  }
  return view.task_id;
}
