/** Single-page console: corpus panel | query console | references + usage.
 *
 * One query in flight per session; uploads may proceed while reading past
 * answers. All rendered state comes from API responses.
 */

import { ApiClient, ApiError } from "./api.js";
import { checkConsistency } from "./citations.js";
import {
  renderAnswer,
  renderDocumentList,
  renderErrorBanner,
  renderProgress,
  renderReferencePanel,
  renderUsage,
} from "./render.js";

interface Elements {
  corpusPanel: HTMLElement;
  uploadInput: HTMLInputElement;
  uploadStatus: HTMLElement;
  queryInput: HTMLInputElement;
  grainToggle: HTMLSelectElement;
  submit: HTMLButtonElement;
  console: HTMLElement;
  referencePanel: HTMLElement;
  usagePanel: HTMLElement;
}

function grab(doc: Document): Elements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  };
  return {
    corpusPanel: byId("corpus-panel"),
    uploadInput: byId<HTMLInputElement>("upload-input"),
    uploadStatus: byId("upload-status"),
    queryInput: byId<HTMLInputElement>("query-input"),
    grainToggle: byId<HTMLSelectElement>("grain-toggle"),
    submit: byId<HTMLButtonElement>("submit-query"),
    console: byId("query-console"),
    referencePanel: byId("reference-panel"),
    usagePanel: byId("usage-panel"),
  };
}

export async function startApp(doc: Document, base: string): Promise<void> {
  const els = grab(doc);
  let api: ApiClient;
  try {
    api = await ApiClient.discover(base);
  } catch (err) {
    els.corpusPanel.appendChild(
      renderErrorBanner(doc, `Service unreachable: ${String(err)}`, () => {
        els.corpusPanel.querySelector(".error-banner")?.remove();
        void startApp(doc, base);
      }),
    );
    return;
  }

  let queryBusy = false;

  const refreshDocuments = async () => {
    const documents = await api.listDocuments();
    els.corpusPanel.querySelector(".doc-list")?.remove();
    els.corpusPanel.appendChild(renderDocumentList(doc, documents));
    updateSubmitState();
  };

  const refreshUsage = async () => {
    const usage = await api.getUsage();
    els.usagePanel.replaceChildren(renderUsage(doc, usage));
  };

  const updateSubmitState = () => {
    els.submit.disabled = queryBusy || els.queryInput.value.trim().length === 0;
  };

  els.queryInput.addEventListener("input", updateSubmitState);

  els.uploadInput.addEventListener("change", async () => {
    const file = els.uploadInput.files?.[0];
    if (!file) return;
    els.uploadStatus.textContent = `Ingesting ${file.name}...`;
    try {
      const docId = await api.uploadDocument(file.name, file);
      els.uploadStatus.textContent = `Ingested ${file.name} as ${docId}`;
      await refreshDocuments();
      await refreshUsage();
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      els.uploadStatus.textContent = "";
      els.corpusPanel.appendChild(renderErrorBanner(doc, `Upload failed: ${message}`));
    }
  });

  els.submit.addEventListener("click", async () => {
    const query = els.queryInput.value.trim();
    if (!query || queryBusy) return;
    queryBusy = true;
    updateSubmitState();
    const grain = els.grainToggle.value === "coarse" ? "coarse" : "fine";
    els.console.replaceChildren(renderProgress(doc, 0, 0));
    try {
      const result = await api.query(query, grain, (progress) => {
        els.console.replaceChildren(renderProgress(doc, progress.completed, progress.total));
      });
      els.console.replaceChildren(
        renderAnswer(doc, result.annotated_answer || "(no relevant context found)", {
          refs: result.references,
          api,
          contributingParaIds: result.contributing_para_ids,
        }),
      );
      els.referencePanel.replaceChildren(renderReferencePanel(doc, result.references));
      if (grain === "fine") {
        const report = checkConsistency(result.annotated_answer, result.references);
        if (report.missingFromPanel.length || report.unusedInAnswer.length) {
          els.referencePanel.appendChild(
            renderErrorBanner(
              doc,
              `Citation mismatch: missing ${report.missingFromPanel}, unused ${report.unusedInAnswer}`,
            ),
          );
        }
      }
      await refreshUsage();
    } catch (err) {
      if (err instanceof ApiError && err.code === "empty_corpus") {
        els.console.replaceChildren(
          renderErrorBanner(doc, "The corpus is empty. Upload at least one PDF, then ask again."),
        );
      } else {
        const message = err instanceof ApiError ? err.message : String(err);
        els.console.replaceChildren(renderErrorBanner(doc, `Query failed: ${message}`));
      }
    } finally {
      queryBusy = false;
      updateSubmitState();
    }
  });

  await refreshDocuments();
  await refreshUsage();
  updateSubmitState();
}

declare const window: (Window & typeof globalThis) | undefined;

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("corpus-panel")) {
  void startApp(document, "");
}
