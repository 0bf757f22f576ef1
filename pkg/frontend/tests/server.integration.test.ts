// End-to-end check against the real review service: build a run from the
// repository fixtures with the pipeline CLI, serve it, and drive the
// typed client through the whole review flow.
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, ReviewClient } from "../src/api.js";
import { nextPending, openOrResume } from "../src/flow.js";
import type { Session } from "../src/types.js";

const repoRoot = fileURLToPath(new URL("../..", import.meta.url));
const fixtures = join(repoRoot, "tests", "fixtures");

let workDir: string;
let server: ChildProcess | null = null;
let serverLog = "";
let client: ReviewClient;

function cli(...args: string[]): void {
  execFileSync("privacy-stories", args, { stdio: "pipe" });
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.on("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        probe.close();
        reject(new Error("no port assigned"));
        return;
      }
      const port = address.port;
      probe.close(() => resolve(port));
    });
  });
}

async function waitForServer(baseUrl: string): Promise<void> {
  for (let attempt = 0; attempt < 120; attempt += 1) {
    if (server && server.exitCode !== null) break;
    try {
      const response = await fetch(`${baseUrl}/runs`);
      if (response.ok) return;
    } catch {
      // not accepting connections yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`review service never came up\n${serverLog}`);
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "review-ui-"));
  const runDir = join(workDir, "run");
  cli(
    "ingest",
    "--run-dir", runDir,
    "--docs", join(fixtures, "corpus"),
    "--gold", join(fixtures, "gold.json"),
  );
  cli(
    "annotate",
    "--run-dir", runDir,
    "--replay",
    "--store", join(fixtures, "replay_store"),
    "--responses", "2",
    "--model", "fixture-model",
  );

  const port = await freePort();
  const baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(
    "privacy-stories",
    ["review-serve", "--run-dir", runDir, "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverLog += chunk));
  server.stderr?.on("data", (chunk) => (serverLog += chunk));
  await waitForServer(baseUrl);
  client = new ReviewClient(baseUrl);
}, 120_000);

afterAll(async () => {
  if (server) {
    server.kill("SIGTERM");
    await new Promise((resolve) => {
      server?.once("exit", resolve);
      setTimeout(resolve, 3_000);
    });
  }
  rmSync(workDir, { recursive: true, force: true });
});

describe("review service over HTTP", () => {
  let session: Session;

  it("lists the fixture run", async () => {
    const { runs } = await client.listRuns();
    expect(runs).toHaveLength(1);
    expect(runs[0].run_id).toBe("run");
    expect(runs[0].document_count).toBe(25);
    expect(runs[0].story_count).toBe(120);
    expect(runs[0].model_name).toBe("fixture-model");
    expect(runs[0].session_count).toBe(0);
  });

  it("lists documents with story counts and response pairs", async () => {
    const { documents } = await client.listDocuments("run");
    expect(documents).toHaveLength(25);
    const total = documents.reduce((sum, doc) => sum + doc.story_count, 0);
    expect(total).toBe(120);
    for (const doc of documents) {
      expect(doc.response_indices).toEqual([0, 1]);
    }
  });

  it("rejects an unknown run with a 404 detail", async () => {
    const error = await client
      .listDocuments("ghost")
      .then(() => null, (e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(404);
    expect((error as ApiError).message).toContain("ghost");
  });

  it("serves a document with text, gold, stories, and both responses", async () => {
    const { documents } = await client.listDocuments("run");
    const withStories = documents.find((doc) => doc.story_count > 0);
    expect(withStories).toBeDefined();
    const detail = await client.getDocument(withStories!.id, "run");
    expect(detail.run_id).toBe("run");
    expect(detail.text.length).toBeGreaterThan(0);
    expect(Object.keys(detail.labels).sort()).toEqual([
      "actions",
      "data_types",
      "purposes",
    ]);
    expect(detail.stories).toHaveLength(withStories!.story_count);
    expect(detail.stories[0].story_index).toBe(0);
    expect(detail.responses).toHaveLength(2);
    for (const response of detail.responses) {
      expect(response.text.length).toBeGreaterThan(0);
    }
  });

  it("404s an unknown document", async () => {
    const error = await client
      .getDocument("no-such-doc", "run")
      .then(() => null, (e: unknown) => e);
    expect((error as ApiError).status).toBe(404);
  });

  it("creates a session covering every generated story", async () => {
    session = await client.createSession("run", "itest");
    expect(session.session_id).toBe("run--itest");
    expect(session.status).toBe("open");
    expect(session.assigned_stories).toBe(120);
    expect(session.judged_stories).toBe(0);
    expect(session.pending).toHaveLength(120);
  });

  it("rejects a duplicate session for the same reviewer", async () => {
    const error = await client
      .createSession("run", "itest")
      .then(() => null, (e: unknown) => e);
    expect((error as ApiError).status).toBe(400);
    expect((error as ApiError).message).toContain("already has a session");
  });

  it("resumes that session through openOrResume", async () => {
    const resumed = await openOrResume(client, "run", "itest");
    expect(resumed.session_id).toBe("run--itest");
    expect(resumed.assigned_stories).toBe(120);
  });

  it("records a story judgment and shrinks the pending list", async () => {
    const target = nextPending(session);
    expect(target).not.toBeNull();
    session = await client.sendStoryJudgment(session.session_id, {
      document_id: target!.document_id,
      story_index: target!.story_index,
      q1_accurate: true,
      q2_missing_behaviors: false,
    });
    expect(session.judged_stories).toBe(1);
    expect(session.pending).toHaveLength(119);
    expect(session.story_judgments[0]).toMatchObject({
      document_id: target!.document_id,
      story_index: target!.story_index,
      q1_accurate: true,
    });
  });

  it("rejects a judgment for a story index that does not exist", async () => {
    const error = await client
      .sendStoryJudgment(session.session_id, {
        document_id: session.story_judgments[0].document_id,
        story_index: 999,
        q1_accurate: true,
        q2_missing_behaviors: false,
      })
      .then(() => null, (e: unknown) => e);
    expect((error as ApiError).status).toBe(400);
    expect((error as ApiError).message).toContain("no story index 999");
  });

  it("records a q3 note for a document", async () => {
    const documentId = session.story_judgments[0].document_id;
    session = await client.sendDocumentJudgment(session.session_id, {
      document_id: documentId,
      q3_missing_stories: "the retention behavior is never mentioned",
    });
    expect(session.document_judgments).toContainEqual({
      document_id: documentId,
      q3_missing_stories: "the retention behavior is never mentioned",
    });
  });

  it("records a response preference and validates the indices", async () => {
    const documentId = session.story_judgments[0].document_id;
    session = await client.sendPreference(session.session_id, {
      document_id: documentId,
      chosen_response_index: 1,
      rejected_response_index: 0,
    });
    expect(session.preferences).toContainEqual({
      document_id: documentId,
      chosen_response_index: 1,
      rejected_response_index: 0,
    });

    const error = await client
      .sendPreference(session.session_id, {
        document_id: documentId,
        chosen_response_index: 1,
        rejected_response_index: 1,
      })
      .then(() => null, (e: unknown) => e);
    expect((error as ApiError).status).toBe(400);
    expect((error as ApiError).message).toContain("equal");
  });

  it("reflects the recorded work when the session is fetched back", async () => {
    const fetched = await client.getSession("run--itest");
    expect(fetched.judged_stories).toBe(1);
    expect(fetched.document_judgments).toHaveLength(1);
    expect(fetched.preferences).toHaveLength(1);
    expect(fetched.status).toBe("open");
  });

  it("aggregates the review report with the fixture gold gap", async () => {
    const report = await client.getReport("run");
    expect(report.run_id).toBe("run");
    expect(report.sessions).toContain("run--itest");
    expect(report.overall.total_stories).toBe(120);
    expect(report.overall.accurate_any).toBe(1);
    expect(report.gold_stories.total).toBe(93);
    expect(report.gold_stories.never_matched).toBe(36);
    expect(report.gold_stories.missing).toHaveLength(36);
    expect(report.q3_missing_stories).toHaveLength(1);
    expect(report.q3_missing_stories[0].text).toContain("retention");
  });
});
