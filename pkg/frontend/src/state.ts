/**
 * Rating session state machine.
 *
 * One active task per session; the session advances only after the
 * service acknowledges a submission, and an in-flight guard makes
 * double submits impossible.  Progress numbers always come from the
 * service, never from local counting.
 */

import { AnnotateClient, ApiError, Progress, TaskView } from "./api.js";

export type Phase = "idle" | "loading" | "task" | "submitting" | "done" | "error";

export const VALID_SCORES = [1, 2, 3, 4, 5] as const;

export interface SessionSnapshot {
  phase: Phase;
  task: TaskView | null;
  rubric: string[];
  progress: Progress;
  selectedScore: number | null;
  error: string | null;
}

type Listener = (snapshot: SessionSnapshot) => void;

export class RatingSession {
  private phase: Phase = "idle";
  private task: TaskView | null = null;
  private rubric: string[] = [];
  private progress: Progress = { rated: 0, total: 0 };
  private selectedScore: number | null = null;
  private error: string | null = null;
  private listeners: Listener[] = [];

  constructor(
    private readonly api: AnnotateClient,
    readonly raterId: string,
  ) {}

  snapshot(): SessionSnapshot {
    return {
      phase: this.phase,
      task: this.task,
      rubric: this.rubric,
      progress: this.progress,
      selectedScore: this.selectedScore,
      error: this.error,
    };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.snapshot());
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) {
      listener(snap);
    }
  }

  /** Register with the service and fetch the first task. */
  async start(): Promise<void> {
    this.phase = "loading";
    this.error = null;
    this.emit();
    try {
      await this.api.register(this.raterId);
    } catch (err) {
      this.fail(err);
      return;
    }
    await this.fetchNext();
  }

  /** Fetch the next task (also used by the retry banner). */
  async fetchNext(): Promise<void> {
    this.phase = "loading";
    this.error = null;
    this.emit();
    try {
      const view = await this.api.next(this.raterId);
      this.rubric = view.rubric;
      this.progress = view.progress;
      if (view.done) {
        this.task = null;
        this.phase = "done";
      } else {
        this.task = view;
        this.phase = "task";
      }
      this.selectedScore = null;
    } catch (err) {
      this.fail(err);
      return;
    }
    this.emit();
  }

  /** Select a score; only the five discrete values are accepted. */
  select(score: number): boolean {
    if (this.phase !== "task") {
      return false;
    }
    if (!VALID_SCORES.includes(score as (typeof VALID_SCORES)[number])) {
      return false;
    }
    this.selectedScore = score;
    this.emit();
    return true;
  }

  get canSubmit(): boolean {
    return this.phase === "task" && this.selectedScore !== null;
  }

  /**
   * Submit the selected score.  No-op unless a task is shown and a
   * score is selected; re-entrant calls while a submission is in
   * flight are ignored, so a double click posts exactly once.
   */
  async submit(comment?: string): Promise<boolean> {
    if (!this.canSubmit || this.task === null || this.selectedScore === null) {
      return false;
    }
    const body = {
      task_id: this.task.task_id,
      rater_id: this.raterId,
      score: this.selectedScore,
      ...(comment ? { comment } : {}),
    };
    this.phase = "submitting";
    this.emit();
    try {
      const ack = await this.api.submitRating(body);
      this.progress = ack.progress;
    } catch (err) {
      // duplicate / out-of-range / transport: surface verbatim, keep task
      this.phase = "task";
      this.error = err instanceof Error ? err.message : String(err);
      this.emit();
      return false;
    }
    await this.fetchNext();
    return true;
  }

  private fail(err: unknown): void {
    this.phase = "error";
    this.error =
      err instanceof ApiError
        ? err.message
        : err instanceof Error
          ? `network failure: ${err.message}`
          : String(err);
    this.emit();
  }
}
