/** Thin DOM layer: renders view models; all data logic lives upstream. */
import type { StoryCard, DetailPanel } from "./view.js";
import { STRATEGIES } from "./types.js";
import type { ViewState } from "./state.js";

export interface Handlers {
  onDateChange(date: string): void;
  onStrategyChange(strategy: string): void;
  onPageChange(page: number): void;
  onOpenStory(storyId: string): void;
  onCloseDetail(): void;
  onMarkFake(storyId: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderToolbar(
  root: HTMLElement,
  state: ViewState,
  handlers: Handlers,
): void {
  root.replaceChildren();
  const dateSelect = el("select", "date-select");
  for (const date of state.dates) {
    const option = el("option", undefined, date);
    option.value = date;
    option.selected = date === state.selectedDate;
    dateSelect.append(option);
  }
  dateSelect.addEventListener("change", () =>
    handlers.onDateChange(dateSelect.value),
  );
  root.append(dateSelect);

  const strategies = el("div", "strategies");
  for (const strategy of STRATEGIES) {
    const button = el(
      "button",
      strategy === state.strategy ? "strategy active" : "strategy",
      strategy.replace("_", " "),
    );
    button.addEventListener("click", () =>
      handlers.onStrategyChange(strategy),
    );
    strategies.append(button);
  }
  root.append(strategies);

  const pager = el("div", "pager");
  const prev = el("button", "page-btn", "‹ prev");
  prev.disabled = state.page <= 1;
  prev.addEventListener("click", () => handlers.onPageChange(state.page - 1));
  const label = el("span", "page-label", `page ${state.page}`);
  const next = el("button", "page-btn", "next ›");
  next.addEventListener("click", () => handlers.onPageChange(state.page + 1));
  pager.append(prev, label, next);
  root.append(pager);
}

export function renderGrid(
  root: HTMLElement,
  cards: StoryCard[],
  error: string | null,
  handlers: Handlers,
): void {
  root.replaceChildren();
  if (error) {
    const banner = el("div", "error-banner", `request failed: ${error}`);
    root.append(banner); // previous grid stays below the banner
  }
  if (!cards.length) {
    root.append(el("div", "placeholder", "no content for this date"));
    return;
  }
  const grid = el("div", "grid");
  for (const card of cards) {
    const cell = el("div", `card band-${card.scoreBand}`);
    const img = el("img", "thumb");
    img.src = card.imageUrl;
    img.alt = `story ${card.storyId}`;
    const meta = el("div", "card-meta");
    meta.append(
      el("span", "share-count", `${card.shareCount} shares`),
      el("span", `score-badge band-${card.scoreBand}`, card.scoreBadge),
    );
    if (card.verdict === "fake") {
      meta.append(el("span", "verdict-chip", "fake"));
    }
    cell.append(img, meta);
    cell.addEventListener("click", () => handlers.onOpenStory(card.storyId));
    grid.append(cell);
  }
  root.append(grid);
}

export function renderDetail(
  root: HTMLElement,
  panel: DetailPanel | null,
  notice: string | null,
  handlers: Handlers,
): void {
  root.replaceChildren();
  if (notice) {
    const note = el("div", "notice", notice);
    const dismiss = el("button", "dismiss", "dismiss");
    dismiss.addEventListener("click", () => handlers.onCloseDetail());
    note.append(dismiss);
    root.append(note);
  }
  if (!panel) {
    root.classList.remove("open");
    return;
  }
  root.classList.add("open");
  const close = el("button", "close", "×");
  close.addEventListener("click", () => handlers.onCloseDetail());
  const img = el("img", "detail-image");
  img.src = panel.imageUrl;
  img.alt = `story ${panel.storyId}`;

  const stats = el("dl", "stats");
  for (const [label, value] of [
    ["shares", String(panel.shareCount)],
    ["users", String(panel.distinctUsers)],
    ["groups", String(panel.distinctGroups)],
    ["first seen", panel.firstSeen],
    ["verdict", panel.verdict],
  ]) {
    stats.append(el("dt", undefined, label), el("dd", undefined, value));
  }

  const gauge = el("div", `thermometer band-${panel.thermometer}`);
  const fill = el("div", "mercury");
  fill.style.height = `${Math.round(panel.thermometerFill * 100)}%`;
  gauge.append(fill);
  const gaugeLabel = el(
    "div",
    "thermometer-label",
    `${panel.scorePercent} · ${panel.thermometer}`,
  );

  const actions = el("div", "actions");
  if (panel.canMarkFake) {
    const mark = el("button", "mark-fake", "mark as fake");
    mark.addEventListener("click", () => handlers.onMarkFake(panel.storyId));
    actions.append(mark);
  } else {
    actions.append(el("span", "already-fake", "verified fake"));
  }

  root.append(close, img, gauge, gaugeLabel, stats, actions);
}
