/** Dashboard view state and its pure transitions.
 *
 * The grid is whatever the API last answered: items are stored in
 * response order and never re-sorted client-side. A stale rank response
 * (older sequence number than the one already applied) is dropped.
 */
import type { RankResponse, StoryDetail, Strategy } from "./types.js";
import { isStrategy } from "./types.js";

export interface ViewState {
  dates: string[];
  selectedDate: string | null;
  strategy: Strategy;
  page: number;
  grid: StoryDetail[];
  gridTotal: number;
  appliedSeq: number;
  openStoryId: string | null;
  detail: StoryDetail | null;
  error: string | null;
  notice: string | null;
}

export function initialState(): ViewState {
  return {
    dates: [],
    selectedDate: null,
    strategy: "fakeness",
    page: 1,
    grid: [],
    gridTotal: 0,
    appliedSeq: 0,
    openStoryId: null,
    detail: null,
    error: null,
    notice: null,
  };
}

export function withDates(state: ViewState, dates: string[]): ViewState {
  const selected =
    state.selectedDate && dates.includes(state.selectedDate)
      ? state.selectedDate
      : (dates[dates.length - 1] ?? null);
  return { ...state, dates, selectedDate: selected };
}

/** Switching strategy keeps the date and resets paging. */
export function withStrategy(state: ViewState, strategy: string): ViewState {
  if (!isStrategy(strategy)) {
    return { ...state, error: `unknown strategy: ${strategy}` };
  }
  return { ...state, strategy, page: 1 };
}

export function withDate(state: ViewState, date: string): ViewState {
  return { ...state, selectedDate: date, page: 1 };
}

export function withPage(state: ViewState, page: number): ViewState {
  return { ...state, page: Math.max(1, Math.trunc(page)) };
}

/** Apply a rank response unless something newer already landed. */
export function applyRank(
  state: ViewState,
  seq: number,
  response: RankResponse,
): ViewState {
  if (seq <= state.appliedSeq) {
    return state; // stale response: a newer strategy/date already rendered
  }
  return {
    ...state,
    appliedSeq: seq,
    grid: response.items,
    gridTotal: response.total,
    strategy: response.strategy,
    error: null,
  };
}

/** API failure keeps the previous grid and surfaces a banner. */
export function applyRankFailure(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

export function openDetail(state: ViewState, detail: StoryDetail): ViewState {
  return { ...state, openStoryId: detail.story_id, detail, notice: null };
}

export function closeDetail(state: ViewState): ViewState {
  return { ...state, openStoryId: null, detail: null, notice: null };
}

export function withNotice(state: ViewState, notice: string | null): ViewState {
  return { ...state, notice };
}

/** In-place verdict update after a label submission acknowledgement. */
export function applyVerdict(
  state: ViewState,
  storyId: string,
  verdict: StoryDetail["verdict"],
): ViewState {
  const grid = state.grid.map((item) =>
    item.story_id === storyId ? { ...item, verdict } : item,
  );
  const detail =
    state.detail && state.detail.story_id === storyId
      ? { ...state.detail, verdict }
      : state.detail;
  return { ...state, grid, detail };
}
