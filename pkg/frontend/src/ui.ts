/** DOM rendering for the witness console. All state lives in the controller. */

import { groupedAttributes } from "./attributes.js";
import type { SessionController } from "./controller.js";
import type { Relevance } from "./types.js";

const CHOICES: Array<{ value: Relevance; label: string; cls: string }> = [
  { value: 1, label: "same", cls: "same" },
  { value: -1, label: "different", cls: "diff" },
  { value: 0, label: "skip", cls: "skip" },
];

export function render(root: HTMLElement, controller: SessionController): void {
  root.replaceChildren();
  switch (controller.phase) {
    case "idle":
    case "starting":
      root.appendChild(startScreen(controller));
      break;
    case "done":
      root.appendChild(summaryScreen(controller));
      break;
    default:
      root.appendChild(roundScreen(controller));
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function startScreen(controller: SessionController): HTMLElement {
  const panel = el("div", "panel start");
  panel.appendChild(el("h2", undefined, "Start a retrieval session"));
  const modeSelect = el("select");
  for (const mode of ["progressive", "full", "full-no-attr"]) {
    const option = el("option", undefined, mode) as HTMLOptionElement;
    option.value = mode;
    modeSelect.appendChild(option);
  }
  const button = el("button", "primary", "Begin") as HTMLButtonElement;
  button.disabled = controller.phase === "starting";
  button.addEventListener("click", () => {
    void controller.start((modeSelect as HTMLSelectElement).value);
  });
  panel.append(modeSelect, button);
  return panel;
}

function roundScreen(controller: SessionController): HTMLElement {
  const panel = el("div", "panel round");
  panel.appendChild(
    el("h2", undefined, `Round ${controller.round} of ${controller.roundsTotal}`),
  );
  if (controller.candidate) {
    panel.appendChild(candidateCard(controller));
    panel.appendChild(budgetCounter(controller));
    panel.appendChild(attributeRows(controller));
  }
  if (controller.lastError) {
    panel.appendChild(el("p", "error", controller.lastError));
  }
  panel.appendChild(actions(controller));
  panel.appendChild(historyStrip(controller));
  return panel;
}

function candidateCard(controller: SessionController): HTMLElement {
  const candidate = controller.candidate!;
  const card = el("div", "candidate");
  if (candidate.image_url) {
    const img = el("img") as HTMLImageElement;
    img.src = candidate.image_url;
    img.alt = `candidate ${candidate.id}`;
    card.appendChild(img);
  }
  card.appendChild(el("h3", undefined, `Candidate ${candidate.id}`));
  if (!candidate.image_url) {
    card.appendChild(
      el("p", "hint", "No image asset; judge by the attribute card below."),
    );
  }
  return card;
}

function budgetCounter(controller: SessionController): HTMLElement {
  const used = controller.selections?.nonzeroCount() ?? 0;
  const counter = el(
    "p",
    "budget",
    `Disclosed ${used} of ${controller.budget} allowed this round`,
  );
  counter.dataset.remaining = String(controller.budget - used);
  return counter;
}

function attributeRows(controller: SessionController): HTMLElement {
  const candidate = controller.candidate!;
  const selections = controller.selections!;
  const table = el("div", "attributes");
  for (const [group, rows] of groupedAttributes(candidate.attributes.length)) {
    const section = el("section", "group");
    section.appendChild(el("h4", undefined, group));
    for (const meta of rows) {
      const row = el("div", "attr-row");
      row.dataset.index = String(meta.index);
      const present = candidate.attributes[meta.index] > 0;
      row.appendChild(
        el("span", "attr-label", `${meta.label}: ${present ? "yes" : "no"}`),
      );
      for (const choice of CHOICES) {
        const button = el("button", `choice ${choice.cls}`, choice.label) as HTMLButtonElement;
        if (selections.get(meta.index) === choice.value) {
          button.classList.add("selected");
        }
        button.addEventListener("click", () => {
          if (!selections.set(meta.index, choice.value)) {
            controller.lastError = "Disclosure budget reached; skip something first.";
          } else {
            controller.lastError = null;
          }
          rerender(controller);
        });
        row.appendChild(button);
      }
      section.appendChild(row);
    }
    table.appendChild(section);
  }
  return table;
}

function actions(controller: SessionController): HTMLElement {
  const bar = el("div", "actions");
  const submit = el("button", "primary", "Send feedback") as HTMLButtonElement;
  submit.disabled = !controller.canSubmit();
  submit.addEventListener("click", () => void controller.submit());
  const confirm = el("button", "confirm", "This is them") as HTMLButtonElement;
  confirm.disabled = controller.phase !== "active";
  confirm.addEventListener("click", () => void controller.confirmMatch());
  bar.append(submit, confirm);
  return bar;
}

function historyStrip(controller: SessionController): HTMLElement {
  const strip = el("div", "history");
  if (controller.history.length === 0) return strip;
  strip.appendChild(el("h4", undefined, "Previous rounds"));
  for (const entry of controller.history) {
    const item = el("div", "history-entry");
    item.appendChild(
      el("span", undefined, `round ${entry.round}: ${entry.candidate.id}`),
    );
    item.appendChild(el("span", "chips", `${entry.disclosed} disclosed`));
    strip.appendChild(item);
  }
  return strip;
}

function summaryScreen(controller: SessionController): HTMLElement {
  const panel = el("div", "panel summary");
  panel.appendChild(
    el(
      "h2",
      undefined,
      controller.succeeded ? "Match confirmed" : "Session complete",
    ),
  );
  if (controller.candidate) {
    panel.appendChild(
      el("p", undefined, `Final candidate: ${controller.candidate.id}`),
    );
  }
  panel.appendChild(historyStrip(controller));
  const again = el("button", "primary", "New session") as HTMLButtonElement;
  again.addEventListener("click", () => {
    controller.phase = "idle";
    rerender(controller);
  });
  panel.appendChild(again);
  return panel;
}

let mountedRoot: HTMLElement | null = null;

export function mount(root: HTMLElement, controller: SessionController): void {
  mountedRoot = root;
  controller.onChange(() => render(root, controller));
  render(root, controller);
}

function rerender(controller: SessionController): void {
  if (mountedRoot) render(mountedRoot, controller);
}
