/** Dashboard bootstrap: wire the API client, state, and DOM together. */
import { MonitorClient, ApiRequestError } from "./api.js";
import { loadConfig } from "./config.js";
import * as state from "./state.js";
import { buildCards, buildDetail } from "./view.js";
import { renderDetail, renderGrid, renderToolbar, type Handlers } from "./dom.js";

async function start(): Promise<void> {
  const config = await loadConfig();
  const token =
    sessionStorage.getItem("fakerank_token") ??
    window.prompt("access token") ??
    "";
  sessionStorage.setItem("fakerank_token", token);
  const client = new MonitorClient(config.apiBaseUrl, token);

  let current = state.initialState();
  const toolbar = document.getElementById("toolbar")!;
  const gridRoot = document.getElementById("grid-root")!;
  const detailRoot = document.getElementById("detail-root")!;

  const render = () => {
    renderToolbar(toolbar, current, handlers);
    renderGrid(
      gridRoot,
      buildCards(current.grid, (id) => client.imageUrl(id)),
      current.error,
      handlers,
    );
    renderDetail(
      detailRoot,
      current.detail ? buildDetail(current.detail, (id) => client.imageUrl(id)) : null,
      current.notice,
      handlers,
    );
  };

  const refreshGrid = async () => {
    if (!current.selectedDate) return;
    try {
      const { seq, response } = await client.rank({
        date: current.selectedDate,
        strategy: current.strategy,
        page: current.page,
      });
      current = state.applyRank(current, seq, response);
    } catch (error) {
      if ((error as Error).name === "AbortError") return; // superseded
      current = state.applyRankFailure(current, (error as Error).message);
    }
    render();
  };

  const handlers: Handlers = {
    onDateChange(date) {
      current = state.withDate(current, date);
      render();
      void refreshGrid();
    },
    onStrategyChange(strategy) {
      current = state.withStrategy(current, strategy);
      render();
      void refreshGrid();
    },
    onPageChange(page) {
      current = state.withPage(current, page);
      render();
      void refreshGrid();
    },
    async onOpenStory(storyId) {
      try {
        const detail = await client.story(storyId);
        current = state.openDetail(current, detail);
      } catch (error) {
        const message =
          error instanceof ApiRequestError && error.code === 404
            ? `story ${storyId} no longer exists`
            : (error as Error).message;
        current = state.withNotice(current, message);
      }
      render();
    },
    onCloseDetail() {
      current = state.closeDetail(current);
      render();
    },
    async onMarkFake(storyId) {
      try {
        const ack = await client.submitLabel(storyId, "fake");
        current = state.applyVerdict(current, ack.story_id, ack.verdict);
      } catch (error) {
        current = state.withNotice(current, (error as Error).message);
      }
      render();
    },
  };

  current = state.withDates(current, (await client.dates()).dates);
  render();
  await refreshGrid();
}

start().catch((error) => {
  document.body.textContent = `dashboard failed to start: ${error}`;
});
