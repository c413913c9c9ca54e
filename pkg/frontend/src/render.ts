/** DOM builders for the three console panels.
 *
 * All builders take the target Document so they run under jsdom in tests
 * exactly as in the browser. State always derives from API payloads; the
 * renderers never compute references themselves.
 */

import type { ApiClient } from "./api.js";
import type { DocumentInfo, References, UsageSummary } from "./types.js";
import { segmentAnswer } from "./citations.js";

const popoverPromises = new WeakMap<HTMLElement, Promise<HTMLElement>>();

/** Test hook: resolves once the popover for a citation span is populated. */
export function popoverReady(el: HTMLElement): Promise<HTMLElement> | undefined {
  return popoverPromises.get(el);
}

export function renderDocumentList(doc: Document, documents: DocumentInfo[]): HTMLElement {
  const container = doc.createElement("div");
  container.className = "doc-list";
  if (documents.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No documents yet. Upload a PDF to start a corpus.";
    container.appendChild(empty);
    return container;
  }
  const list = doc.createElement("ul");
  for (const item of documents) {
    const li = doc.createElement("li");
    li.dataset.docId = item.doc_id;
    const title = doc.createElement("strong");
    title.textContent = item.title;
    const meta = doc.createElement("span");
    meta.className = "doc-meta";
    meta.textContent = ` ${item.page_count} page(s), ${item.paragraph_count} paragraph(s), ${item.notation_style} citations`;
    li.append(title, meta);
    list.appendChild(li);
  }
  container.appendChild(list);
  return container;
}

export function renderReferencePanel(doc: Document, refs: References): HTMLElement {
  const container = doc.createElement("div");
  container.className = "reference-panel";
  const list = doc.createElement("ol");
  for (const p of refs.primary) {
    const li = doc.createElement("li");
    li.value = p.number;
    li.dataset.number = String(p.number);
    li.dataset.kind = "primary";
    li.dataset.docId = p.doc_id;
    li.textContent = p.title;
    list.appendChild(li);
  }
  for (const s of refs.secondary) {
    const li = doc.createElement("li");
    li.value = s.number;
    li.dataset.number = String(s.number);
    li.dataset.kind = "secondary";
    li.dataset.docId = s.doc_id;
    li.textContent = s.raw;
    list.appendChild(li);
  }
  container.appendChild(list);
  return container;
}

export interface PopoverDeps {
  refs: References;
  api: ApiClient;
  /** para_ids that contributed to the answer, used to locate a primary's paragraph */
  contributingParaIds: string[];
}

export function renderAnswer(doc: Document, annotated: string, deps: PopoverDeps): HTMLElement {
  const container = doc.createElement("div");
  container.className = "answer";
  for (const segment of segmentAnswer(annotated)) {
    if (segment.kind === "text") {
      container.appendChild(doc.createTextNode(segment.text));
      continue;
    }
    const span = doc.createElement("span");
    span.className = "cite";
    span.textContent = segment.text;
    span.dataset.numbers = segment.numbers.join(",");
    span.tabIndex = 0;
    attachPopover(doc, span, segment.numbers, deps);
    container.appendChild(span);
  }
  return container;
}

function attachPopover(doc: Document, span: HTMLElement, numbers: number[], deps: PopoverDeps): void {
  const show = () => {
    if (span.querySelector(".popover")) return;
    const promise = buildPopover(doc, numbers, deps).then((popover) => {
      span.appendChild(popover);
      return popover;
    });
    popoverPromises.set(span, promise);
  };
  const hide = () => {
    span.querySelector(".popover")?.remove();
    popoverPromises.delete(span);
  };
  span.addEventListener("mouseenter", show);
  span.addEventListener("focus", show);
  span.addEventListener("mouseleave", hide);
  span.addEventListener("blur", hide);
}

export async function buildPopover(
  doc: Document,
  numbers: number[],
  deps: PopoverDeps,
): Promise<HTMLElement> {
  const popover = doc.createElement("div");
  popover.className = "popover";
  for (const n of numbers) {
    const entry = doc.createElement("div");
    entry.className = "popover-entry";
    entry.dataset.number = String(n);
    const primary = deps.refs.primary.find((p) => p.number === n);
    const secondary = deps.refs.secondary.find((s) => s.number === n);
    const text = doc.createElement("p");
    if (primary) {
      text.textContent = `[${n}] ${primary.title}`;
      const paraId = deps.contributingParaIds.find((id) => id.startsWith(`${primary.doc_id}/`));
      if (paraId) entry.appendChild(await paragraphPreview(doc, paraId, deps.api));
    } else if (secondary) {
      text.textContent = `[${n}] ${secondary.raw}`;
    } else {
      text.textContent = `[${n}] (not in reference panel)`;
      entry.dataset.missing = "true";
    }
    entry.prepend(text);
    popover.appendChild(entry);
  }
  return popover;
}

async function paragraphPreview(doc: Document, paraId: string, api: ApiClient): Promise<HTMLElement> {
  const link = doc.createElement("a");
  link.className = "paragraph-link";
  link.dataset.paraId = paraId;
  link.href = `${api.base}/api/corpora/${api.corpusId}/paragraphs/${paraId}`;
  try {
    const paragraph = await api.getParagraph(paraId);
    link.textContent = paragraph.text.length > 160 ? paragraph.text.slice(0, 157) + "..." : paragraph.text;
    link.dataset.loaded = "true";
  } catch {
    link.textContent = "open source paragraph";
  }
  return link;
}

export function renderUsage(doc: Document, usage: UsageSummary): HTMLElement {
  const container = doc.createElement("div");
  container.className = "usage-panel";
  const table = doc.createElement("table");
  const head = doc.createElement("tr");
  for (const label of ["Stage", "Calls", "Input tokens", "Output tokens"]) {
    const th = doc.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const stage of Object.keys(usage.stages).sort()) {
    const row = doc.createElement("tr");
    row.dataset.stage = stage;
    const cells = [
      stage,
      String(usage.stages[stage]?.calls ?? 0),
      String(usage.stages[stage]?.input_tokens ?? 0),
      String(usage.stages[stage]?.output_tokens ?? 0),
    ];
    for (const text of cells) {
      const td = doc.createElement("td");
      td.textContent = text;
      row.appendChild(td);
    }
    table.appendChild(row);
  }
  const totals = doc.createElement("tr");
  totals.dataset.stage = "total";
  for (const text of [
    "total",
    String(usage.totals.calls),
    String(usage.totals.input_tokens),
    String(usage.totals.output_tokens),
  ]) {
    const td = doc.createElement("td");
    td.textContent = text;
    totals.appendChild(td);
  }
  table.appendChild(totals);
  const cost = doc.createElement("p");
  cost.className = "cost";
  cost.dataset.cost = usage.cost.toFixed(6);
  cost.textContent = `Estimated cost: $${usage.cost.toFixed(4)}`;
  container.append(table, cost);
  return container;
}

export function renderProgress(doc: Document, completed: number, total: number): HTMLElement {
  const progress = doc.createElement("p");
  progress.className = "progress";
  progress.dataset.completed = String(completed);
  progress.dataset.total = String(total);
  progress.textContent =
    total > 0 ? `Synthesizing: ${completed} / ${total} contexts integrated` : "Retrieving contexts...";
  return progress;
}

export function renderErrorBanner(doc: Document, message: string, onRetry?: () => void): HTMLElement {
  const banner = doc.createElement("div");
  banner.className = "error-banner";
  const text = doc.createElement("span");
  text.textContent = message;
  banner.appendChild(text);
  if (onRetry) {
    const retry = doc.createElement("button");
    retry.textContent = "Retry";
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
  }
  return banner;
}
