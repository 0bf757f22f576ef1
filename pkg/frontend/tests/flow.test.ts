import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import {
  groupPending,
  judgmentFor,
  nextPending,
  openOrResume,
  otherResponseIndex,
  percent,
  preferenceFor,
  progressPercent,
  q3For,
  reportRows,
  sessionIdFor,
} from "../src/flow.js";
import type { ReviewReport, Session } from "../src/types.js";

function makeSession(partial: Partial<Session> = {}): Session {
  return {
    session_id: "run--alice",
    run_id: "run",
    reviewer_id: "alice",
    status: "open",
    assigned_stories: 4,
    judged_stories: 1,
    pending: [
      { document_id: "a", story_index: 1 },
      { document_id: "a", story_index: 2 },
      { document_id: "b", story_index: 0 },
    ],
    story_judgments: [
      {
        document_id: "a",
        story_index: 0,
        q1_accurate: true,
        q2_missing_behaviors: false,
      },
    ],
    document_judgments: [{ document_id: "a", q3_missing_stories: "a note" }],
    preferences: [
      { document_id: "a", chosen_response_index: 1, rejected_response_index: 0 },
    ],
    ...partial,
  };
}

describe("sessionIdFor", () => {
  it("joins run and reviewer with a double dash", () => {
    expect(sessionIdFor("run", "alice")).toBe("run--alice");
  });

  it("trims the reviewer id like the service does", () => {
    expect(sessionIdFor("run", "  alice ")).toBe("run--alice");
  });
});

describe("progressPercent", () => {
  it("rounds judged over assigned", () => {
    expect(progressPercent(makeSession())).toBe(25);
    expect(
      progressPercent(makeSession({ assigned_stories: 3, judged_stories: 2 })),
    ).toBe(67);
  });

  it("treats an empty assignment as done", () => {
    expect(
      progressPercent(makeSession({ assigned_stories: 0, judged_stories: 0 })),
    ).toBe(100);
  });
});

describe("pending helpers", () => {
  it("groups pending stories by document in order", () => {
    const grouped = groupPending(makeSession().pending);
    expect([...grouped.keys()]).toEqual(["a", "b"]);
    expect(grouped.get("a")).toEqual([1, 2]);
    expect(grouped.get("b")).toEqual([0]);
  });

  it("returns the first pending story, or null when done", () => {
    expect(nextPending(makeSession())).toEqual({
      document_id: "a",
      story_index: 1,
    });
    expect(nextPending(makeSession({ pending: [] }))).toBeNull();
  });
});

describe("session lookups", () => {
  const session = makeSession();

  it("finds a recorded story judgment by key", () => {
    expect(judgmentFor(session, "a", 0)?.q1_accurate).toBe(true);
    expect(judgmentFor(session, "a", 1)).toBeUndefined();
    expect(judgmentFor(session, "zz", 0)).toBeUndefined();
  });

  it("finds preferences and q3 notes by document", () => {
    expect(preferenceFor(session, "a")?.chosen_response_index).toBe(1);
    expect(preferenceFor(session, "b")).toBeUndefined();
    expect(q3For(session, "a")).toBe("a note");
    expect(q3For(session, "b")).toBeUndefined();
  });
});

describe("otherResponseIndex", () => {
  it("returns the remaining index of an exact pair", () => {
    expect(otherResponseIndex([0, 1], 0)).toBe(1);
    expect(otherResponseIndex([0, 1], 1)).toBe(0);
  });

  it("returns null when the pick is not in the pair", () => {
    expect(otherResponseIndex([0, 1], 2)).toBeNull();
  });

  it("returns null unless there are exactly two responses", () => {
    expect(otherResponseIndex([0], 0)).toBeNull();
    expect(otherResponseIndex([0, 1, 2], 0)).toBeNull();
  });
});

describe("reportRows", () => {
  it("lists file types alphabetically with overall last", () => {
    const counts = {
      accurate_all: 1,
      accurate_any: 2,
      missing_behaviors_all: 0,
      missing_behaviors_any: 1,
      total_stories: 3,
    };
    const report: ReviewReport = {
      run_id: "run",
      sessions: ["run--alice"],
      per_file_type: { guide: counts, architecture: counts },
      overall: { ...counts, total_stories: 6 },
      gold_stories: { total: 0, never_matched: 0, missing: [] },
      q3_missing_stories: [],
    };
    const labels = reportRows(report).map((row) => row.label);
    expect(labels).toEqual(["architecture", "guide", "overall"]);
    expect(reportRows(report).at(-1)?.total_stories).toBe(6);
  });
});

describe("percent", () => {
  it("formats a rounded percentage", () => {
    expect(percent(1, 3)).toBe("33%");
    expect(percent(2, 3)).toBe("67%");
    expect(percent(0, 5)).toBe("0%");
  });

  it("dashes out a zero denominator", () => {
    expect(percent(0, 0)).toBe("-");
  });
});

describe("openOrResume", () => {
  it("returns the freshly created session", async () => {
    const created = makeSession();
    const client = {
      createSession: async () => created,
      getSession: async () => {
        throw new Error("should not resume");
      },
    };
    expect(await openOrResume(client, "run", "alice")).toBe(created);
  });

  it("resumes via the deterministic session id on a duplicate", async () => {
    const existing = makeSession();
    const fetched: string[] = [];
    const client = {
      createSession: async () => {
        throw new ApiError(400, "reviewer 'alice' already has a session");
      },
      getSession: async (sessionId: string) => {
        fetched.push(sessionId);
        return existing;
      },
    };
    expect(await openOrResume(client, "run", " alice ")).toBe(existing);
    expect(fetched).toEqual(["run--alice"]);
  });

  it("rethrows the create error when the resume lookup also fails", async () => {
    const client = {
      createSession: async () => {
        throw new ApiError(400, "reviewer_id must be non-empty");
      },
      getSession: async () => {
        throw new ApiError(404, "unknown session");
      },
    };
    await expect(openOrResume(client, "run", "x")).rejects.toMatchObject({
      status: 400,
      message: "reviewer_id must be non-empty",
    });
  });

  it("does not try to resume on non-400 failures", async () => {
    const client = {
      createSession: async () => {
        throw new ApiError(404, "unknown run 'nope'");
      },
      getSession: async () => {
        throw new Error("should not be called");
      },
    };
    await expect(openOrResume(client, "nope", "alice")).rejects.toMatchObject({
      status: 404,
    });
  });
});
