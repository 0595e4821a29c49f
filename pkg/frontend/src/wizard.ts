/**
 * Survey wizard state machine: demographics, one step per image,
 * one step per mood item, then review. DOM-free so the flow and its
 * validation rules are unit-testable.
 *
 * Validation mirrors the server's record rules (answer/response counts
 * and scales), so a record produced by a completed wizard is never
 * rejected by the service.
 */

import type { SurveyDefinition, SurveyRecordBody } from "./api.js";

export const IMAGE_PROMPT = "Please use one word to describe what's in this image.";

export const DEMOGRAPHIC_FIELDS = ["age", "gender", "occupation"] as const;

export type WizardStep =
  | { part: "demographics" }
  | { part: "images"; index: number; count: number; imageId: string; prompt: string }
  | { part: "mood"; index: number; count: number; text: string }
  | { part: "review" };

export class SurveyWizard {
  private stepIndex = 0;
  private readonly words: string[];
  private readonly ratings: (number | null)[];
  private readonly answers: (number | null)[];
  private readonly demographics: Record<string, string> = {};
  private belief: number | null = null;

  constructor(private readonly definition: SurveyDefinition) {
    this.words = definition.image_ids.map(() => "");
    this.ratings = definition.image_ids.map(() => null);
    this.answers = definition.masq_items.map(() => null);
  }

  /** demographics + images + mood items + review */
  get stepCount(): number {
    return 1 + this.definition.image_ids.length + this.definition.masq_items.length + 1;
  }

  current(): WizardStep {
    const images = this.definition.image_ids.length;
    const moods = this.definition.masq_items.length;
    if (this.stepIndex === 0) {
      return { part: "demographics" };
    }
    if (this.stepIndex <= images) {
      const index = this.stepIndex - 1;
      return {
        part: "images",
        index,
        count: images,
        imageId: this.definition.image_ids[index],
        prompt: IMAGE_PROMPT,
      };
    }
    if (this.stepIndex <= images + moods) {
      const index = this.stepIndex - 1 - images;
      return {
        part: "mood",
        index,
        count: moods,
        text: this.definition.masq_items[index].text,
      };
    }
    return { part: "review" };
  }

  setDemographic(key: string, value: string): void {
    if (value.trim() === "") {
      delete this.demographics[key];
    } else {
      this.demographics[key] = value.trim();
    }
  }

  setBelief(value: number | null): void {
    this.belief = value;
  }

  setWord(value: string): void {
    const step = this.current();
    if (step.part !== "images") {
      throw new Error("not on an image step");
    }
    this.words[step.index] = value;
  }

  setRating(value: number | null): void {
    const step = this.current();
    if (step.part !== "images") {
      throw new Error("not on an image step");
    }
    this.ratings[step.index] = value;
  }

  setAnswer(value: number | null): void {
    const step = this.current();
    if (step.part !== "mood") {
      throw new Error("not on a mood step");
    }
    this.answers[step.index] = value;
  }

  wordFor(index: number): string {
    return this.words[index];
  }

  ratingFor(index: number): number | null {
    return this.ratings[index];
  }

  answerFor(index: number): number | null {
    return this.answers[index];
  }

  demographicsEntered(): Record<string, string> {
    return { ...this.demographics };
  }

  beliefEntered(): number | null {
    return this.belief;
  }

  /** Validation message for the current step, or null when it may advance. */
  stepError(): string | null {
    const step = this.current();
    switch (step.part) {
      case "demographics": {
        const [lo, hi] = this.definition.masq_scale;
        if (this.belief !== null && !withinScale(this.belief, lo, hi)) {
          return `belief rating must be a whole number between ${lo} and ${hi}`;
        }
        return null;
      }
      case "images": {
        const word = this.words[step.index].trim();
        if (word === "") {
          return "describe the image with one word before continuing";
        }
        if (/\s/.test(word)) {
          return "use a single word, without spaces";
        }
        const rating = this.ratings[step.index];
        const [lo, hi] = this.definition.image_scale;
        if (rating === null) {
          return `rate the image from ${lo} to ${hi} before continuing`;
        }
        if (!withinScale(rating, lo, hi)) {
          return `rating must be a whole number between ${lo} and ${hi}`;
        }
        return null;
      }
      case "mood": {
        const answer = this.answers[step.index];
        const [lo, hi] = this.definition.masq_scale;
        if (answer === null) {
          return `answer from ${lo} to ${hi} before continuing`;
        }
        if (!withinScale(answer, lo, hi)) {
          return `answer must be a whole number between ${lo} and ${hi}`;
        }
        return null;
      }
      case "review":
        return null;
    }
  }

  /** Advance when the current step validates; false leaves stepError() set. */
  next(): boolean {
    if (this.stepError() !== null) {
      return false;
    }
    if (this.stepIndex < this.stepCount - 1) {
      this.stepIndex += 1;
    }
    return true;
  }

  back(): boolean {
    if (this.stepIndex === 0) {
      return false;
    }
    this.stepIndex -= 1;
    return true;
  }

  atReview(): boolean {
    return this.current().part === "review";
  }

  /** True once every step holds a valid entry. */
  complete(): boolean {
    const [masqLo, masqHi] = this.definition.masq_scale;
    const [imgLo, imgHi] = this.definition.image_scale;
    if (this.belief !== null && !withinScale(this.belief, masqLo, masqHi)) {
      return false;
    }
    for (let i = 0; i < this.words.length; i++) {
      const word = this.words[i].trim();
      const rating = this.ratings[i];
      if (word === "" || /\s/.test(word)) return false;
      if (rating === null || !withinScale(rating, imgLo, imgHi)) return false;
    }
    return this.answers.every(
      (a) => a !== null && withinScale(a, masqLo, masqHi),
    );
  }

  /** The record to submit; only available once the wizard is complete. */
  record(): SurveyRecordBody {
    if (!this.complete()) {
      throw new Error("survey incomplete: every item needs a valid entry");
    }
    const body: SurveyRecordBody = {
      masq_answers: this.answers.map((a) => a as number),
      image_responses: this.definition.image_ids.map((_, i) => ({
        word: this.words[i].trim(),
        rating: this.ratings[i] as number,
      })),
      demographics: { ...this.demographics },
    };
    if (this.belief !== null) {
      body.feng_shui_belief = this.belief;
    }
    return body;
  }
}

function withinScale(value: number, lo: number, hi: number): boolean {
  return Number.isInteger(value) && value >= lo && value <= hi;
}
