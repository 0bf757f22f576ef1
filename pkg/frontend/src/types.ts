// Shapes returned by the review service. Field names mirror the JSON
// payloads exactly so responses can be used without translation.

export interface RunSummary {
  run_id: string;
  document_count: number;
  story_count: number;
  model_name: string | null;
  template_version: string | null;
  taxonomy_version: string | null;
  session_count: number;
}

export interface RunList {
  runs: RunSummary[];
}

export interface DocumentSummary {
  id: string;
  file_type: string;
  app_name: string;
  story_count: number;
  gold_story_count: number;
  response_indices: number[];
}

export interface DocumentList {
  run_id: string;
  documents: DocumentSummary[];
}

export interface StoryTriple {
  action: string;
  data_types: string[];
  purposes: string[];
}

export interface GoldStory extends StoryTriple {
  text: string;
}

export interface GoldPayload {
  actions: string[];
  data_types: string[];
  purposes: string[];
  stories: GoldStory[];
}

export interface LabelBuckets {
  matched: string[];
  invented: string[];
}

export interface StoryEntry {
  story_index: number;
  raw: string;
  parsed: StoryTriple | null;
  matches_gold: boolean;
  problems?: string[];
}

export interface ResponseEntry {
  response_index: number;
  text: string;
  rationale: string;
  stories: string[];
}

export interface DocumentDetail {
  id: string;
  run_id: string;
  file_type: string;
  app_name: string;
  text: string;
  gold: GoldPayload | null;
  labels: Record<string, LabelBuckets>;
  stories: StoryEntry[];
  responses: ResponseEntry[];
}

export interface StoryKey {
  document_id: string;
  story_index: number;
}

export interface StoryJudgment extends StoryKey {
  q1_accurate: boolean;
  q2_missing_behaviors: boolean;
}

export interface DocumentJudgment {
  document_id: string;
  q3_missing_stories: string;
}

export interface Preference {
  document_id: string;
  chosen_response_index: number;
  rejected_response_index: number;
}

export interface Session {
  session_id: string;
  run_id: string;
  reviewer_id: string;
  status: "open" | "complete";
  assigned_stories: number;
  judged_stories: number;
  pending: StoryKey[];
  story_judgments: StoryJudgment[];
  document_judgments: DocumentJudgment[];
  preferences: Preference[];
}

export interface AgreementCounts {
  accurate_all: number;
  accurate_any: number;
  missing_behaviors_all: number;
  missing_behaviors_any: number;
  total_stories: number;
}

export interface MissingGoldStory extends StoryTriple {
  document_id: string;
  story: string;
}

export interface Q3Note {
  session_id: string;
  document_id: string;
  text: string;
}

export interface ReviewReport {
  run_id: string;
  sessions: string[];
  per_file_type: Record<string, AgreementCounts>;
  overall: AgreementCounts;
  gold_stories: {
    total: number;
    never_matched: number;
    missing: MissingGoldStory[];
  };
  q3_missing_stories: Q3Note[];
}
