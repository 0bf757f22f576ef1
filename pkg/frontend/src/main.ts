// Page wiring: hash routing, rendering, and the handlers that post
// judgments and preferences back to the review service.
import { ReviewClient } from "./api.js";
import {
  judgmentFor,
  nextPending,
  openOrResume,
  otherResponseIndex,
  percent,
  preferenceFor,
  progressPercent,
  q3For,
  reportRows,
} from "./flow.js";
import type { DocumentDetail, Session, StoryEntry } from "./types.js";

const SESSION_KEY = "review-session-id";

const client = new ReviewClient();
let session: Session | null = null;

const view = document.getElementById("view") as HTMLElement;
const errorBanner = document.getElementById("error-banner") as HTMLElement;
const sessionBadge = document.getElementById("session-badge") as HTMLElement;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function showError(error: unknown): void {
  errorBanner.textContent = error instanceof Error ? error.message : String(error);
  errorBanner.hidden = false;
}

function clearError(): void {
  errorBanner.hidden = true;
}

function setSession(updated: Session): void {
  session = updated;
  sessionStorage.setItem(SESSION_KEY, updated.session_id);
  refreshBadge();
}

function refreshBadge(): void {
  if (session === null) {
    sessionBadge.hidden = true;
    return;
  }
  sessionBadge.hidden = false;
  sessionBadge.textContent =
    `${session.reviewer_id}: ${session.judged_stories}/${session.assigned_stories}` +
    (session.status === "complete" ? " (complete)" : "");
}

async function restoreSession(): Promise<void> {
  const stored = sessionStorage.getItem(SESSION_KEY);
  if (!stored) return;
  try {
    session = await client.getSession(stored);
  } catch {
    sessionStorage.removeItem(SESSION_KEY);
  }
  refreshBadge();
}

// session for the run currently on screen, if any
function sessionFor(runId: string): Session | null {
  return session !== null && session.run_id === runId ? session : null;
}

// routing

interface Route {
  view: "runs" | "run" | "doc" | "report";
  runId?: string;
  docId?: string;
}

function parseHash(): Route {
  const parts = location.hash
    .replace(/^#\/?/, "")
    .split("/")
    .filter(Boolean)
    .map(decodeURIComponent);
  if (parts[0] === "run" && parts[1]) return { view: "run", runId: parts[1] };
  if (parts[0] === "doc" && parts[1] && parts[2]) {
    return { view: "doc", runId: parts[1], docId: parts[2] };
  }
  if (parts[0] === "report" && parts[1]) {
    return { view: "report", runId: parts[1] };
  }
  return { view: "runs" };
}

async function render(): Promise<void> {
  clearError();
  view.replaceChildren(el("p", "muted", "Loading..."));
  const route = parseHash();
  try {
    if (route.view === "run") await renderRun(route.runId as string);
    else if (route.view === "doc") {
      await renderDoc(route.runId as string, route.docId as string);
    } else if (route.view === "report") {
      await renderReport(route.runId as string);
    } else await renderRuns();
  } catch (error) {
    view.replaceChildren();
    showError(error);
  }
}

// runs view

async function renderRuns(): Promise<void> {
  const { runs } = await client.listRuns();
  const table = el("table");
  const head = el("tr");
  for (const label of ["Run", "Documents", "Stories", "Model", "Sessions"]) {
    head.append(el("th", "", label));
  }
  table.append(head);
  for (const run of runs) {
    const row = el("tr", "rowlink");
    row.append(
      el("td", "", run.run_id),
      el("td", "", String(run.document_count)),
      el("td", "", String(run.story_count)),
      el("td", "", run.model_name ?? "-"),
      el("td", "", String(run.session_count)),
    );
    row.addEventListener("click", () => {
      location.hash = `#/run/${encodeURIComponent(run.run_id)}`;
    });
    table.append(row);
  }
  view.replaceChildren(el("h2", "", "Runs"), table);
}

// run view: document list plus session controls

function sessionCard(runId: string): HTMLElement {
  const card = el("div", "card");
  const active = sessionFor(runId);
  if (active !== null) {
    card.append(
      el("h3", "", `Review session: ${active.reviewer_id}`),
      el(
        "p",
        "muted",
        `${active.judged_stories} of ${active.assigned_stories} stories judged` +
          (active.status === "complete" ? "; session complete and closed" : ""),
      ),
    );
    const track = el("div", "progress-track");
    const fill = el("div", "progress-fill");
    fill.style.width = `${progressPercent(active)}%`;
    track.append(fill);
    card.append(track);
    const pending = nextPending(active);
    if (pending !== null) {
      const go = el("button", "primary", "Go to next pending story");
      go.addEventListener("click", () => {
        location.hash =
          `#/doc/${encodeURIComponent(runId)}/` +
          encodeURIComponent(pending.document_id);
      });
      card.append(go);
    }
    return card;
  }
  card.append(el("h3", "", "Start reviewing"));
  const input = el("input");
  input.type = "text";
  input.placeholder = "reviewer id";
  const start = el("button", "primary", "Start or resume session");
  const begin = async () => {
    const reviewerId = input.value.trim();
    if (!reviewerId) return;
    try {
      setSession(await openOrResume(client, runId, reviewerId));
      await render();
    } catch (error) {
      showError(error);
    }
  };
  start.addEventListener("click", begin);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void begin();
  });
  const row = el("div", "toolbar");
  row.append(input, start);
  card.append(row);
  return card;
}

async function renderRun(runId: string): Promise<void> {
  const { documents } = await client.listDocuments(runId);
  const toolbar = el("div", "toolbar");
  const report = el("a", "", "View agreement report");
  report.href = `#/report/${encodeURIComponent(runId)}`;
  toolbar.append(el("a", "", "< runs"), report);
  (toolbar.children[0] as HTMLAnchorElement).href = "#/";

  const table = el("table");
  const head = el("tr");
  for (const label of ["Document", "App", "Type", "Stories", "Gold stories"]) {
    head.append(el("th", "", label));
  }
  table.append(head);
  for (const doc of documents) {
    const row = el("tr", "rowlink");
    row.append(
      el("td", "", doc.id),
      el("td", "", doc.app_name),
      el("td", "", doc.file_type),
      el("td", "", String(doc.story_count)),
      el("td", "", String(doc.gold_story_count)),
    );
    row.addEventListener("click", () => {
      location.hash =
        `#/doc/${encodeURIComponent(runId)}/${encodeURIComponent(doc.id)}`;
    });
    table.append(row);
  }
  view.replaceChildren(
    toolbar,
    el("h2", "", `Run ${runId}`),
    sessionCard(runId),
    table,
  );
}

// document view

function chipList(labels: string[], invented = false): HTMLElement {
  const wrap = el("div", "chips");
  for (const label of labels) {
    const chip = el("span", invented ? "chip invented" : "chip", label);
    if (invented) chip.title = "not in the taxonomy";
    wrap.append(chip);
  }
  return wrap;
}

function goldCard(detail: DocumentDetail): HTMLElement {
  const card = el("div", "card");
  card.append(el("h3", "", "Gold annotation"));
  if (detail.gold === null) {
    card.append(el("p", "muted", "No gold annotation for this document."));
    return card;
  }
  for (const [name, labels] of [
    ["Actions", detail.gold.actions],
    ["Data types", detail.gold.data_types],
    ["Purposes", detail.gold.purposes],
  ] as const) {
    card.append(el("p", "muted", name), chipList(labels));
  }
  card.append(el("p", "muted", `Gold stories (${detail.gold.stories.length})`));
  const list = el("ul");
  for (const story of detail.gold.stories) {
    list.append(el("li", "", story.text));
  }
  card.append(list);
  return card;
}

function labelsCard(detail: DocumentDetail): HTMLElement {
  const card = el("div", "card");
  card.append(el("h3", "", "Extracted labels"));
  for (const category of Object.keys(detail.labels)) {
    const buckets = detail.labels[category];
    card.append(el("p", "muted", category.replace("_", " ")));
    const chips = chipList(buckets.matched);
    chipList(buckets.invented, true)
      .querySelectorAll(".chip")
      .forEach((chip) => chips.append(chip));
    card.append(chips);
  }
  return card;
}

function judgeRow(
  active: Session,
  documentId: string,
  story: StoryEntry,
  container: HTMLElement,
): HTMLElement {
  const existing = judgmentFor(active, documentId, story.story_index);
  let q1: boolean | null = existing ? existing.q1_accurate : null;
  let q2: boolean | null = existing ? existing.q2_missing_behaviors : null;
  const closed = active.status === "complete";

  const row = el("div", "judge-row");
  const repaints: Array<() => void> = [];
  const makePair = (
    label: string,
    get: () => boolean | null,
    set: (value: boolean) => void,
  ) => {
    row.append(el("span", "question", label));
    for (const value of [true, false]) {
      const button = el("button", "", value ? "Yes" : "No");
      const paint = () => {
        button.className =
          get() === value ? (value ? "picked-yes" : "picked-no") : "";
      };
      paint();
      repaints.push(paint);
      button.disabled = closed;
      button.addEventListener("click", async () => {
        set(value);
        repaints.forEach((fn) => fn());
        await submit();
      });
      row.append(button);
    }
  };

  const submit = async () => {
    if (q1 === null || q2 === null) return;
    try {
      setSession(
        await client.sendStoryJudgment(active.session_id, {
          document_id: documentId,
          story_index: story.story_index,
          q1_accurate: q1,
          q2_missing_behaviors: q2,
        }),
      );
      container.classList.add("judged");
      clearError();
    } catch (error) {
      showError(error);
    }
  };

  makePair("Q1 accurate?", () => q1, (value) => (q1 = value));
  makePair("Q2 behaviors missing?", () => q2, (value) => (q2 = value));
  return row;
}

function storyCard(
  detail: DocumentDetail,
  active: Session | null,
): HTMLElement {
  const card = el("div", "card");
  card.append(el("h3", "", `Generated stories (${detail.stories.length})`));
  if (active === null) {
    card.append(
      el("p", "muted", "Start a session on the run page to record judgments."),
    );
  }
  for (const story of detail.stories) {
    const judged =
      active !== null &&
      judgmentFor(active, detail.id, story.story_index) !== undefined;
    const block = el(
      "div",
      "story" +
        (story.matches_gold ? " gold-match" : "") +
        (judged ? " judged" : ""),
    );
    block.append(el("div", "raw", story.raw));
    if (story.parsed !== null) {
      block.append(
        el(
          "div",
          "meta",
          `${story.parsed.action} / ${story.parsed.data_types.join(", ")} / ` +
            `${story.parsed.purposes.join(", ")}` +
            (story.matches_gold ? " (matches gold)" : ""),
        ),
      );
    }
    if (story.problems && story.problems.length > 0) {
      block.append(el("div", "problems", story.problems.join("; ")));
    }
    if (active !== null) {
      block.append(judgeRow(active, detail.id, story, block));
    }
    card.append(block);
  }
  return card;
}

function q3Card(detail: DocumentDetail, active: Session): HTMLElement {
  const card = el("div", "card");
  card.append(
    el("h3", "", "Q3: stories the model should have produced"),
    el(
      "p",
      "muted",
      "Describe behaviors in the document that no generated story covers. " +
        "Leave empty if nothing is missing.",
    ),
  );
  const text = el("textarea");
  text.value = q3For(active, detail.id) ?? "";
  const save = el("button", "primary", "Save note");
  const closed = active.status === "complete";
  text.disabled = closed;
  save.disabled = closed;
  save.addEventListener("click", async () => {
    try {
      setSession(
        await client.sendDocumentJudgment(active.session_id, {
          document_id: detail.id,
          q3_missing_stories: text.value,
        }),
      );
      clearError();
      save.textContent = "Saved";
      setTimeout(() => (save.textContent = "Save note"), 1200);
    } catch (error) {
      showError(error);
    }
  });
  card.append(text, save);
  return card;
}

function responsesCard(
  detail: DocumentDetail,
  active: Session | null,
): HTMLElement {
  const card = el("div", "card");
  card.append(el("h3", "", "Responses"));
  const indices = detail.responses.map((r) => r.response_index);
  const picked = active !== null ? preferenceFor(active, detail.id) : undefined;
  const grid = el("div", "response-grid");
  for (const response of detail.responses) {
    let cls = "response";
    if (picked) {
      if (picked.chosen_response_index === response.response_index) {
        cls += " chosen";
      }
      if (picked.rejected_response_index === response.response_index) {
        cls += " rejected";
      }
    }
    const panel = el("div", cls);
    panel.append(
      el(
        "h3",
        "",
        `Response ${response.response_index}` +
          (picked && picked.chosen_response_index === response.response_index
            ? " (preferred)"
            : ""),
      ),
    );
    if (response.rationale) {
      panel.append(el("p", "muted", response.rationale));
    }
    const list = el("ul");
    for (const line of response.stories) list.append(el("li", "", line));
    panel.append(list);
    const rejected = otherResponseIndex(indices, response.response_index);
    if (active !== null && active.status === "open" && rejected !== null) {
      const prefer = el("button", "", "Prefer this response");
      prefer.addEventListener("click", async () => {
        try {
          setSession(
            await client.sendPreference(active.session_id, {
              document_id: detail.id,
              chosen_response_index: response.response_index,
              rejected_response_index: rejected,
            }),
          );
          clearError();
          await render();
        } catch (error) {
          showError(error);
        }
      });
      panel.append(prefer);
    }
    grid.append(panel);
  }
  card.append(grid);
  return card;
}

async function renderDoc(runId: string, docId: string): Promise<void> {
  // re-pull the session so judgments from other tabs show up
  const active = sessionFor(runId);
  if (active !== null) {
    try {
      session = await client.getSession(active.session_id);
      refreshBadge();
    } catch {
      // keep the stale copy; judgment posts will surface real errors
    }
  }
  const detail = await client.getDocument(docId, runId);
  const fresh = sessionFor(runId);

  const toolbar = el("div", "toolbar");
  const back = el("a", "", "< documents");
  back.href = `#/run/${encodeURIComponent(runId)}`;
  toolbar.append(back, el("span", "muted", `${detail.app_name} (${detail.file_type})`));
  if (fresh !== null) {
    const pending = nextPending(fresh);
    if (pending !== null) {
      const go = el("button", "", "Next pending story");
      go.addEventListener("click", () => {
        location.hash =
          `#/doc/${encodeURIComponent(runId)}/` +
          encodeURIComponent(pending.document_id);
        if (pending.document_id === docId) void render();
      });
      toolbar.append(go);
    }
  }

  const left = el("div");
  const textCard = el("div", "card");
  textCard.append(el("h3", "", "Document"));
  const pre = el("pre", "doc-text", detail.text);
  textCard.append(pre);
  left.append(textCard, goldCard(detail));

  const right = el("div");
  right.append(labelsCard(detail), storyCard(detail, fresh));
  if (fresh !== null) right.append(q3Card(detail, fresh));
  right.append(responsesCard(detail, fresh));

  const columns = el("div", "columns");
  columns.append(left, right);
  view.replaceChildren(toolbar, el("h2", "", detail.id), columns);
}

// report view

async function renderReport(runId: string): Promise<void> {
  const report = await client.getReport(runId);
  const toolbar = el("div", "toolbar");
  const back = el("a", "", "< run");
  back.href = `#/run/${encodeURIComponent(runId)}`;
  toolbar.append(back);

  const table = el("table");
  const head = el("tr");
  for (const label of [
    "File type",
    "Stories",
    "Accurate (all)",
    "Accurate (any)",
    "Missing behaviors (all)",
    "Missing behaviors (any)",
  ]) {
    head.append(el("th", "", label));
  }
  table.append(head);
  for (const row of reportRows(report)) {
    const tr = el("tr");
    tr.append(
      el("td", "", row.label),
      el("td", "", String(row.total_stories)),
      el(
        "td",
        "",
        `${row.accurate_all} (${percent(row.accurate_all, row.total_stories)})`,
      ),
      el(
        "td",
        "",
        `${row.accurate_any} (${percent(row.accurate_any, row.total_stories)})`,
      ),
      el(
        "td",
        "",
        `${row.missing_behaviors_all} ` +
          `(${percent(row.missing_behaviors_all, row.total_stories)})`,
      ),
      el(
        "td",
        "",
        `${row.missing_behaviors_any} ` +
          `(${percent(row.missing_behaviors_any, row.total_stories)})`,
      ),
    );
    table.append(tr);
  }

  const gold = el("div", "card");
  gold.append(
    el("h3", "", "Gold stories never matched"),
    el(
      "p",
      "muted",
      `${report.gold_stories.never_matched} of ${report.gold_stories.total} ` +
        "gold stories were not produced by the reviewed response.",
    ),
  );
  if (report.gold_stories.missing.length > 0) {
    const missTable = el("table");
    const missHead = el("tr");
    missHead.append(el("th", "", "Document"), el("th", "", "Story"));
    missTable.append(missHead);
    for (const miss of report.gold_stories.missing) {
      const tr = el("tr");
      tr.append(el("td", "", miss.document_id), el("td", "", miss.story));
      missTable.append(tr);
    }
    gold.append(missTable);
  }

  const notes = el("div", "card");
  notes.append(el("h3", "", "Q3 notes"));
  if (report.q3_missing_stories.length === 0) {
    notes.append(el("p", "muted", "No notes recorded."));
  } else {
    const list = el("ul");
    for (const note of report.q3_missing_stories) {
      list.append(
        el("li", "", `${note.session_id} on ${note.document_id}: ${note.text}`),
      );
    }
    notes.append(list);
  }

  view.replaceChildren(
    toolbar,
    el("h2", "", `Agreement report: ${runId}`),
    el("p", "muted", `Sessions: ${report.sessions.join(", ")}`),
    table,
    gold,
    notes,
  );
}

window.addEventListener("hashchange", () => void render());

void (async () => {
  await restoreSession();
  await render();
})();
