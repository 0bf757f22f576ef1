// Session-flow logic kept free of DOM and network concerns so it can be
// unit tested directly. main.ts wires these helpers to the page; the only
// I/O here is openOrResume, which takes the client as an argument.
import { ApiError } from "./api.js";
import type {
  AgreementCounts,
  Preference,
  ReviewReport,
  Session,
  StoryJudgment,
  StoryKey,
} from "./types.js";

export function sessionIdFor(runId: string, reviewerId: string): string {
  return `${runId}--${reviewerId.trim()}`;
}

export function progressPercent(session: Session): number {
  if (session.assigned_stories === 0) return 100;
  return Math.round((100 * session.judged_stories) / session.assigned_stories);
}

/** Pending story indices grouped by document, in the server's sort order. */
export function groupPending(pending: StoryKey[]): Map<string, number[]> {
  const grouped = new Map<string, number[]>();
  for (const key of pending) {
    const indices = grouped.get(key.document_id) ?? [];
    indices.push(key.story_index);
    grouped.set(key.document_id, indices);
  }
  return grouped;
}

export function nextPending(session: Session): StoryKey | null {
  return session.pending.length > 0 ? session.pending[0] : null;
}

export function judgmentFor(
  session: Session,
  documentId: string,
  storyIndex: number,
): StoryJudgment | undefined {
  return session.story_judgments.find(
    (j) => j.document_id === documentId && j.story_index === storyIndex,
  );
}

export function preferenceFor(
  session: Session,
  documentId: string,
): Preference | undefined {
  return session.preferences.find((p) => p.document_id === documentId);
}

export function q3For(session: Session, documentId: string): string | undefined {
  const judgment = session.document_judgments.find(
    (j) => j.document_id === documentId,
  );
  return judgment?.q3_missing_stories;
}

/**
 * The response index implicitly rejected when the reviewer picks one of an
 * exact pair. With any other number of responses the rejected side must be
 * chosen explicitly, so this returns null.
 */
export function otherResponseIndex(
  indices: number[],
  chosen: number,
): number | null {
  if (indices.length !== 2 || !indices.includes(chosen)) return null;
  return indices[0] === chosen ? indices[1] : indices[0];
}

export interface ReportRow extends AgreementCounts {
  label: string;
}

/** Per-file-type rows in name order, with the overall row last. */
export function reportRows(report: ReviewReport): ReportRow[] {
  const rows: ReportRow[] = [];
  for (const fileType of Object.keys(report.per_file_type).sort()) {
    rows.push({ label: fileType, ...report.per_file_type[fileType] });
  }
  rows.push({ label: "overall", ...report.overall });
  return rows;
}

export function percent(numerator: number, denominator: number): string {
  if (denominator === 0) return "-";
  return `${Math.round((100 * numerator) / denominator)}%`;
}

export interface SessionOpener {
  createSession(runId: string, reviewerId: string): Promise<Session>;
  getSession(sessionId: string): Promise<Session>;
}

/**
 * Create a session, or pick the reviewer's existing one back up. The
 * service rejects a second create for the same reviewer with a 400; in
 * that case the deterministic session id lets us resume. Any other
 * failure, and a 400 without a matching session, propagate unchanged.
 */
export async function openOrResume(
  client: SessionOpener,
  runId: string,
  reviewerId: string,
): Promise<Session> {
  try {
    return await client.createSession(runId, reviewerId);
  } catch (error) {
    if (!(error instanceof ApiError) || error.status !== 400) throw error;
    try {
      return await client.getSession(sessionIdFor(runId, reviewerId));
    } catch {
      throw error;
    }
  }
}
