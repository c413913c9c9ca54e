/** API payload shapes, mirroring the service's documented wire formats. */

export interface PrimaryRef {
  number: number;
  doc_id: string;
  title: string;
}

export interface SecondaryRef {
  number: number;
  raw: string;
  doc_id: string;
}

export interface References {
  primary: PrimaryRef[];
  secondary: SecondaryRef[];
}

export interface Usage {
  calls: number;
  input_tokens: number;
  output_tokens: number;
  cost: number;
}

export interface QueryResponse {
  query: string;
  grain: "coarse" | "fine";
  answer: string;
  annotated_answer: string;
  references: References;
  contributing_para_ids: string[];
  rounds: number;
  truncation_events?: [string, string][];
  usage: Usage;
}

export interface DocumentInfo {
  doc_id: string;
  title: string;
  origin: string;
  page_count: number;
  paragraph_count: number;
  notation_style: string;
}

export interface MarkerInfo {
  span: [number, number];
  raw: string;
  style: string;
  resolved_keys: unknown[];
  unresolved: boolean;
}

export interface ParagraphInfo {
  para_id: string;
  doc_id: string;
  text: string;
  page_span: [number, number];
  markers: MarkerInfo[];
}

export interface StageUsage {
  calls: number;
  input_tokens: number;
  output_tokens: number;
}

export interface UsageSummary {
  stages: Record<string, StageUsage>;
  totals: { calls: number; input_tokens: number; output_tokens: number };
  cost: number;
}

export interface JobProgress {
  completed: number;
  total: number;
}

export interface JobStatus {
  status: "running" | "done" | "failed";
  progress: JobProgress;
  result?: QueryResponse;
  error?: { code: string; message: string };
}
