/** Typed client for the citeweave HTTP service.
 *
 * Queries that come back as 202 are polled on the jobs endpoint until they
 * reach a terminal state, forwarding progress to the caller.
 */

import type {
  DocumentInfo,
  JobProgress,
  JobStatus,
  ParagraphInfo,
  QueryResponse,
  UsageSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseFor(response: Response): Promise<never> {
  let code = "http_error";
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { error?: { code: string; message: string } };
    if (body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  throw new ApiError(code, message, response.status);
}

export class ApiClient {
  constructor(
    public readonly base: string,
    public readonly corpusId: string,
    private readonly pollIntervalMs = 150,
  ) {}

  static async discover(base: string): Promise<ApiClient> {
    const response = await fetch(`${base}/api/corpora`);
    if (!response.ok) await raiseFor(response);
    const body = (await response.json()) as { corpora: { corpus_id: string }[] };
    const first = body.corpora[0];
    if (!first) throw new ApiError("no_corpus", "service exposes no corpus", 404);
    return new ApiClient(base, first.corpus_id);
  }

  async listDocuments(): Promise<DocumentInfo[]> {
    const response = await fetch(`${this.base}/api/corpora/${this.corpusId}/documents`);
    if (!response.ok) await raiseFor(response);
    const body = (await response.json()) as { documents: DocumentInfo[] };
    return body.documents;
  }

  async uploadDocument(name: string, data: Blob): Promise<string> {
    const form = new FormData();
    form.append("file", data, name);
    const response = await fetch(`${this.base}/api/corpora/${this.corpusId}/documents`, {
      method: "POST",
      body: form,
    });
    if (!response.ok) await raiseFor(response);
    const body = (await response.json()) as { doc_id: string };
    return body.doc_id;
  }

  async query(
    query: string,
    grain: "coarse" | "fine",
    onProgress?: (progress: JobProgress) => void,
  ): Promise<QueryResponse> {
    const response = await fetch(`${this.base}/api/corpora/${this.corpusId}/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query, grain }),
    });
    if (response.status === 202) {
      const body = (await response.json()) as { job_id: string };
      return this.pollJob(body.job_id, onProgress);
    }
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as QueryResponse;
  }

  async pollJob(
    jobId: string,
    onProgress?: (progress: JobProgress) => void,
    maxAttempts = 2000,
  ): Promise<QueryResponse> {
    for (let attempt = 0; attempt < maxAttempts; attempt++) {
      const response = await fetch(`${this.base}/api/jobs/${jobId}`);
      if (!response.ok) await raiseFor(response);
      const status = (await response.json()) as JobStatus;
      if (onProgress) onProgress(status.progress);
      if (status.status === "done" && status.result) return status.result;
      if (status.status === "failed") {
        throw new ApiError(status.error?.code ?? "query_failed", status.error?.message ?? "query failed", 500);
      }
      await new Promise((resolve) => setTimeout(resolve, this.pollIntervalMs));
    }
    throw new ApiError("poll_timeout", `job ${jobId} did not finish`, 504);
  }

  async getParagraph(paraId: string): Promise<ParagraphInfo> {
    const response = await fetch(
      `${this.base}/api/corpora/${this.corpusId}/paragraphs/${paraId}`,
    );
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as ParagraphInfo;
  }

  async getUsage(): Promise<UsageSummary> {
    const response = await fetch(`${this.base}/api/usage`);
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as UsageSummary;
  }
}
