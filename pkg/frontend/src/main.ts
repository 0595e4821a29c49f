/**
 * Browser entry point: renders the console state into #app and wires
 * user interactions. The session id is kept in sessionStorage so a
 * reload resumes from server state.
 */

import { ApiClient } from "./api.js";
import { SessionConsole, type ConsoleSessionView } from "./console.js";
import { DEMOGRAPHIC_FIELDS, IMAGE_PROMPT } from "./wizard.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "";
// operator-configured local image set; ids resolve to files beneath it
const imageBase = params.get("images") ?? "images";
const STORAGE_KEY = "fengshui-session-id";

const client = new ApiClient(baseUrl);
const session = new SessionConsole(client);
const app = document.getElementById("app") as HTMLElement;

function esc(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

function progressStrip(view: ConsoleSessionView): string {
  const pct = Math.min(100, Math.round((100 * view.sampleCount) / view.targetSamples));
  const elapsed = Math.round(view.elapsedMs / 1000);
  return `
    <div class="progress-strip">
      <div class="bar"><div class="fill" style="width:${pct}%"></div></div>
      <span>${view.sampleCount} / ${view.targetSamples} samples · ${elapsed}s · ${esc(view.state ?? "no session")}</span>
    </div>`;
}

function messageBlock(view: ConsoleSessionView): string {
  if (view.messages.length === 0) return "";
  const items = view.messages.map((m) => `<li>${esc(m)}</li>`).join("");
  return `<ul class="messages">${items}</ul>`;
}

function setupForm(): string {
  return `
    <h2>New session</h2>
    <form id="setup-form">
      <label>Session id (optional) <input name="session_id" /></label>
      <label>Width (ft) <input name="width_ft" type="number" step="0.1" required /></label>
      <label>Height (ft) <input name="height_ft" type="number" step="0.1" required /></label>
      <label>Rectangular <input name="is_rectangle" type="checkbox" checked /></label>
      <label>Door direction (deg) <input name="door_direction_deg" type="number" step="1" required /></label>
      <label>Desk direction (deg) <input name="desk_direction_deg" type="number" step="1" required /></label>
      <label>Noise (dB) <input name="noise_db" type="number" step="0.1" required /></label>
      <button type="submit">Start session</button>
    </form>`;
}

function demographicsStep(): string {
  const fields = DEMOGRAPHIC_FIELDS.map(
    (f) => `<label>${esc(f)} <input data-demographic="${esc(f)}" /></label>`,
  ).join("");
  return `
    <h2>Part 1: about you</h2>
    ${fields}
    <label>Belief in feng shui (1-5, optional)
      <input id="belief" type="number" min="1" max="5" step="1" />
    </label>`;
}

function imageStep(view: ConsoleSessionView): string {
  const wizard = session.wizard;
  if (wizard === null || view.itemIndex === null) return "";
  const step = wizard.current();
  if (step.part !== "images") return "";
  const word = wizard.wordFor(step.index);
  const rating = wizard.ratingFor(step.index);
  return `
    <h2>Part 2: image ${step.index + 1} of ${step.count}</h2>
    <img class="stimulus" src="${esc(imageBase)}/${esc(step.imageId)}.jpg" alt="stimulus ${esc(step.imageId)}" />
    <p>${esc(IMAGE_PROMPT)}</p>
    <label>One word <input id="word" value="${esc(word)}" /></label>
    <label>Rating (0-5)
      <input id="rating" type="number" min="0" max="5" step="1" value="${rating ?? ""}" />
    </label>`;
}

function moodStep(view: ConsoleSessionView): string {
  const wizard = session.wizard;
  if (wizard === null || view.itemIndex === null) return "";
  const step = wizard.current();
  if (step.part !== "mood") return "";
  const answer = wizard.answerFor(step.index);
  const buttons = [1, 2, 3, 4, 5]
    .map(
      (v) =>
        `<label class="scale"><input type="radio" name="answer" value="${v}" ${answer === v ? "checked" : ""} /> ${v}</label>`,
    )
    .join("");
  return `
    <h2>Part 3: item ${step.index + 1} of ${step.count}</h2>
    <p>${esc(step.text)}</p>
    <div>${buttons}</div>`;
}

function reviewStep(view: ConsoleSessionView): string {
  const submitted = view.state === "survey_done";
  return `
    <h2>Review</h2>
    <p>${submitted ? "Survey submitted." : "All steps complete."}</p>
    ${view.score !== null ? `<p>Score: ${view.score.toFixed(4)}</p>` : ""}
    ${submitted ? "" : `<button id="submit-survey">Submit survey</button>`}
    ${submitted ? `<button id="finalize">Finalize session</button>` : ""}`;
}

function doneStep(view: ConsoleSessionView): string {
  const summary = session.finalSummary();
  const rows = summary
    ? `<p>Samples: ${summary.sample_count} · Score: ${summary.score.toFixed(4)}</p>`
    : "";
  return `<h2>Session ${esc(view.state ?? "")}</h2>${rows}`;
}

function render(): void {
  const view = session.view();
  let body: string;
  switch (view.part) {
    case "setup":
      body = setupForm();
      break;
    case "demographics":
      body = demographicsStep();
      break;
    case "images":
      body = imageStep(view);
      break;
    case "mood":
      body = moodStep(view);
      break;
    case "review":
      body = reviewStep(view);
      break;
    case "done":
      body = doneStep(view);
      break;
  }
  const nav =
    view.part === "setup" || view.part === "done" || view.part === "review"
      ? ""
      : `<div class="nav">
           <button id="back">Back</button>
           <button id="next">Next</button>
         </div>`;
  const abort = session.canAbort()
    ? `<button id="abort" class="abort">Abort session</button>`
    : "";
  app.innerHTML = `
    ${view.part === "setup" ? "" : progressStrip(view)}
    ${messageBlock(view)}
    ${body}
    ${nav}
    ${abort}`;
  wire(view);
}

function wire(view: ConsoleSessionView): void {
  const form = document.getElementById("setup-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    void session
      .start({
        session_id: String(data.get("session_id") || "") || undefined,
        width_ft: Number(data.get("width_ft")),
        height_ft: Number(data.get("height_ft")),
        is_rectangle: data.get("is_rectangle") === "on",
        door_direction_deg: Number(data.get("door_direction_deg")),
        desk_direction_deg: Number(data.get("desk_direction_deg")),
        noise_db: Number(data.get("noise_db")),
      })
      .then(() => {
        const id = session.view().sessionId;
        if (id) sessionStorage.setItem(STORAGE_KEY, id);
        session.startPolling();
        render();
      });
  });

  for (const input of app.querySelectorAll<HTMLInputElement>("[data-demographic]")) {
    input.addEventListener("change", () => {
      session.wizard?.setDemographic(input.dataset.demographic ?? "", input.value);
    });
  }
  const belief = document.getElementById("belief") as HTMLInputElement | null;
  belief?.addEventListener("change", () => {
    session.wizard?.setBelief(belief.value === "" ? null : Number(belief.value));
  });
  const word = document.getElementById("word") as HTMLInputElement | null;
  word?.addEventListener("input", () => session.wizard?.setWord(word.value));
  const rating = document.getElementById("rating") as HTMLInputElement | null;
  rating?.addEventListener("change", () => {
    session.wizard?.setRating(rating.value === "" ? null : Number(rating.value));
  });
  for (const radio of app.querySelectorAll<HTMLInputElement>("input[name=answer]")) {
    radio.addEventListener("change", () => {
      session.wizard?.setAnswer(Number(radio.value));
    });
  }

  document.getElementById("next")?.addEventListener("click", () => {
    session.next();
    render();
  });
  document.getElementById("back")?.addEventListener("click", () => {
    session.back();
    render();
  });
  document.getElementById("submit-survey")?.addEventListener("click", () => {
    void session.submitSurvey().then(render);
  });
  document.getElementById("finalize")?.addEventListener("click", () => {
    void session.finalize().then(() => {
      session.stopPolling();
      sessionStorage.removeItem(STORAGE_KEY);
      render();
    });
  });
  document.getElementById("abort")?.addEventListener("click", () => {
    void session.abort().then(() => {
      sessionStorage.removeItem(STORAGE_KEY);
      render();
    });
  });
}

const saved = sessionStorage.getItem(STORAGE_KEY);
if (saved) {
  session
    .resume(saved)
    .then(() => {
      session.startPolling();
      render();
    })
    .catch(() => {
      sessionStorage.removeItem(STORAGE_KEY);
      render();
    });
} else {
  render();
}

// refresh only the strip on poll updates; full renders happen on user
// actions, so typing is never interrupted
window.setInterval(() => {
  const strip = document.querySelector(".progress-strip");
  if (strip !== null) {
    strip.outerHTML = progressStrip(session.view());
  }
}, 1000);
