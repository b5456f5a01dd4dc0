/** Wire types mirroring the monitor API responses, field for field. */

export const STRATEGIES = [
  "fakeness",
  "shares",
  "distinct_groups",
  "distinct_users",
] as const;

export type Strategy = (typeof STRATEGIES)[number];

export type Verdict = "fake" | "unchecked";

export type ThermometerBand = "low" | "medium" | "high";

export interface StoryDetail {
  story_id: string;
  share_count: number;
  distinct_users: number;
  distinct_groups: number;
  fakeness_score: number;
  thermometer: ThermometerBand;
  first_seen: string;
  verdict: Verdict;
}

export interface RankResponse {
  date: string;
  strategy: Strategy;
  k: number;
  page: number;
  page_size: number;
  total: number;
  items: StoryDetail[];
}

export interface DatesResponse {
  dates: string[];
}

export interface ModelInfo {
  manifest_checksum: string;
  trained_at: number;
  strategies: Strategy[];
}

export interface LabelAck {
  story_id: string;
  verdict: Verdict;
  status: "ok";
}

export interface ApiError {
  code: number;
  message: string;
}

export function isStrategy(value: string): value is Strategy {
  return (STRATEGIES as readonly string[]).includes(value);
}
