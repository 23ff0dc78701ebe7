/** Scripted in-memory service fake shared by the unit tests. */

import {
  AnnotateClient,
  ApiError,
  ExportView,
  NextResponse,
  RatingBody,
  SubmitAck,
  TaskView,
} from "../src/api.js";

export const FAKE_RUBRIC = [
  "1 - incorrect",
  "2 - off the mark",
  "3 - partially accurate",
  "4 - accurate",
  "5 - exceptional",
];

export interface FakeOptions {
  tasks?: number;
  failNextTimes?: number;
  submitDelayMs?: number;
  rejectSubmitWith?: ApiError;
}

export class FakeApi implements AnnotateClient {
  registerCalls: string[] = [];
  nextCalls = 0;
  submitCalls: RatingBody[] = [];
  private rated = new Set<string>();
  private readonly taskIds: string[];
  private failNextRemaining: number;

  constructor(private readonly options: FakeOptions = {}) {
    const n = options.tasks ?? 3;
    this.taskIds = Array.from({ length: n }, (_, i) => `t${String(i).padStart(3, "0")}`);
    this.failNextRemaining = options.failNextTimes ?? 0;
  }

  private progressFor(raterId: string) {
    const rated = [...this.rated].filter((k) => k.endsWith(`|${raterId}`)).length;
    return { rated, total: this.taskIds.length };
  }

  async register(raterId: string): Promise<{ ok: boolean }> {
    this.registerCalls.push(raterId);
    return { ok: true };
  }

  async next(raterId: string): Promise<NextResponse> {
    this.nextCalls += 1;
    if (this.failNextRemaining > 0) {
      this.failNextRemaining -= 1;
      throw new ApiError(500, "internal error");
    }
    const open = this.taskIds.find((id) => !this.rated.has(`${id}|${raterId}`));
    const progress = this.progressFor(raterId);
    if (open === undefined) {
      return { done: true, progress, rubric: FAKE_RUBRIC };
    }
    const task: TaskView = {
      done: false,
      task_id: open,
      case_id: `case-${open}`,
      model_id: "model",
      case_excerpt: `excerpt for ${open}`,
      predicted_label: 1,
      explanation: `explanation for ${open}`,
      rubric: FAKE_RUBRIC,
      progress,
    };
    return task;
  }

  async submitRating(body: RatingBody): Promise<SubmitAck> {
    if (this.options.submitDelayMs) {
      await new Promise((resolve) => setTimeout(resolve, this.options.submitDelayMs));
    }
    if (this.options.rejectSubmitWith) {
      throw this.options.rejectSubmitWith;
    }
    const key = `${body.task_id}|${body.rater_id}`;
    if (this.rated.has(key)) {
      throw new ApiError(409, `rater ${body.rater_id} already rated task ${body.task_id}`);
    }
    this.submitCalls.push(body);
    this.rated.add(key);
    return { ok: true, task_id: body.task_id, progress: this.progressFor(body.rater_id) };
  }

  async export(): Promise<ExportView> {
    return { ratings: [], distribution: {} };
  }
}
