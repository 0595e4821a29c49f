/**
 * Session console controller: one active session, every state
 * transition round-trips through the service, and the server state is
 * authoritative. Guarantees exactly one survey submission and one
 * finalize call per session, including across page reloads.
 */

import {
  ApiClient,
  ApiError,
  type FinalizeSummary,
  type Progress,
  type RoomMeta,
  type SessionState,
  type SurveyDefinition,
} from "./api.js";
import { pollProgress, type PollHandle } from "./poller.js";
import { SurveyWizard } from "./wizard.js";

export const TARGET_SAMPLES = 1000;

export type ConsolePart =
  | "setup"
  | "demographics"
  | "images"
  | "mood"
  | "review"
  | "done";

export type ConsoleSessionView = {
  sessionId: string | null;
  state: SessionState | null;
  sampleCount: number;
  targetSamples: number;
  elapsedMs: number;
  part: ConsolePart;
  itemIndex: number | null;
  itemCount: number | null;
  score: number | null;
  messages: string[];
};

export class SessionConsole {
  wizard: SurveyWizard | null = null;
  private definition: SurveyDefinition | null = null;
  private sessionId: string | null = null;
  private state: SessionState | null = null;
  private sampleCount = 0;
  private elapsedMs = 0;
  private score: number | null = null;
  private summary: FinalizeSummary | null = null;
  private surveySubmitted = false;
  private notices: string[] = [];
  private poll: PollHandle | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly targetSamples: number = TARGET_SAMPLES,
  ) {}

  /** Create a fresh session and open the wizard. */
  async start(meta: RoomMeta): Promise<void> {
    this.definition = await this.client.getSurveyDefinition();
    const created = await this.client.createSession(meta);
    this.sessionId = created.session_id;
    this.state = created.state;
    this.wizard = new SurveyWizard(this.definition);
    this.surveySubmitted = false;
    this.notices = [];
  }

  /**
   * Rejoin an existing session (page reload). The wizard restarts for a
   * session still collecting; a submitted survey is never re-sent.
   */
  async resume(sessionId: string): Promise<void> {
    this.definition = await this.client.getSurveyDefinition();
    this.sessionId = sessionId;
    const progress = await this.client.getProgress(sessionId);
    this.applyProgress(progress);
    this.surveySubmitted =
      progress.state === "survey_done" || progress.state === "finalized";
    this.wizard = this.surveySubmitted ? null : new SurveyWizard(this.definition);
    this.notices = [];
  }

  private applyProgress(progress: Progress): void {
    this.state = progress.state;
    this.sampleCount = progress.sample_count;
    this.elapsedMs = progress.elapsed_ms;
  }

  /** One-shot progress fetch (the poller uses the same path). */
  async refresh(): Promise<void> {
    if (this.sessionId === null) return;
    this.applyProgress(await this.client.getProgress(this.sessionId));
  }

  startPolling(intervalMs?: number): void {
    if (this.sessionId === null || this.poll !== null) return;
    this.poll = pollProgress(
      this.client,
      this.sessionId,
      (progress) => this.applyProgress(progress),
      (error) => this.pushNotice(describeError(error)),
      intervalMs,
    );
  }

  stopPolling(): void {
    this.poll?.stop();
    this.poll = null;
  }

  next(): boolean {
    if (this.wizard === null) return false;
    this.notices = [];
    if (!this.wizard.next()) {
      this.pushNotice(this.wizard.stepError() ?? "step incomplete");
      return false;
    }
    return true;
  }

  back(): boolean {
    if (this.wizard === null) return false;
    this.notices = [];
    return this.wizard.back();
  }

  /**
   * Submit the survey once. Server state is re-checked first so a
   * resumed tab cannot duplicate a submission.
   */
  async submitSurvey(): Promise<boolean> {
    if (this.sessionId === null) {
      this.pushNotice("no active session");
      return false;
    }
    if (this.surveySubmitted || this.wizard === null) {
      this.pushNotice("survey already submitted");
      return false;
    }
    if (!this.wizard.complete()) {
      this.pushNotice("survey incomplete: finish every step before submitting");
      return false;
    }
    await this.refresh();
    if (this.state === "survey_done" || this.state === "finalized") {
      this.surveySubmitted = true;
      this.pushNotice("survey already submitted");
      return false;
    }
    if (this.state !== "collecting") {
      this.pushNotice(`cannot submit survey yet (session is ${this.state})`);
      return false;
    }
    try {
      const result = await this.client.submitSurvey(
        this.sessionId,
        this.wizard.record(),
      );
      this.state = result.state;
      this.score = result.score;
      this.surveySubmitted = true;
      this.notices = [];
      return true;
    } catch (error) {
      this.pushNotice(describeError(error));
      return false;
    }
  }

  /** Finalize once; the summary's warnings become banner messages. */
  async finalize(): Promise<boolean> {
    if (this.sessionId === null) {
      this.pushNotice("no active session");
      return false;
    }
    if (this.state === "finalized") {
      this.pushNotice("session already finalized");
      return false;
    }
    if (!this.surveySubmitted) {
      this.pushNotice("submit the survey before finalizing");
      return false;
    }
    try {
      const summary = await this.client.finalize(this.sessionId);
      this.summary = summary;
      this.state = summary.state;
      this.sampleCount = summary.sample_count;
      this.score = summary.score;
      this.notices = [...summary.warnings];
      return true;
    } catch (error) {
      this.pushNotice(describeError(error));
      return false;
    }
  }

  /** Available from every non-finalized state. */
  async abort(): Promise<boolean> {
    if (this.sessionId === null) {
      this.pushNotice("no active session");
      return false;
    }
    try {
      const result = await this.client.abort(this.sessionId);
      this.state = result.state;
      this.stopPolling();
      return true;
    } catch (error) {
      this.pushNotice(describeError(error));
      return false;
    }
  }

  canAbort(): boolean {
    return (
      this.sessionId !== null &&
      this.state !== "finalized" &&
      this.state !== "aborted"
    );
  }

  finalSummary(): FinalizeSummary | null {
    return this.summary;
  }

  view(): ConsoleSessionView {
    let part: ConsolePart = "setup";
    let itemIndex: number | null = null;
    let itemCount: number | null = null;
    if (this.state === "finalized" || this.state === "aborted") {
      part = "done";
    } else if (this.surveySubmitted) {
      part = "review";
    } else if (this.wizard !== null) {
      const step = this.wizard.current();
      part = step.part;
      if (step.part === "images" || step.part === "mood") {
        itemIndex = step.index;
        itemCount = step.count;
      }
    }
    return {
      sessionId: this.sessionId,
      state: this.state,
      sampleCount: this.sampleCount,
      targetSamples: this.targetSamples,
      elapsedMs: this.elapsedMs,
      part,
      itemIndex,
      itemCount,
      score: this.score,
      messages: [...this.notices],
    };
  }

  private pushNotice(message: string): void {
    if (!this.notices.includes(message)) {
      this.notices.push(message);
    }
  }
}

/** Service errors are rendered verbatim so operators see what the server saw. */
export function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    const violations = error.violations();
    if (violations.length > 0) {
      return violations.map((v) => `${v.code}: ${v.message}`).join("; ");
    }
    return `service error ${error.status}: ${error.message}`;
  }
  return error instanceof Error ? error.message : String(error);
}
