/** Pure view-model builders: state in, render-ready structures out.
 *
 * Ordering is never recomputed here; cards come out exactly as the API
 * listed them.
 */
import type { StoryDetail, ThermometerBand } from "./types.js";

export interface StoryCard {
  storyId: string;
  imageUrl: string;
  shareCount: number;
  scoreBadge: string;
  scoreBand: ThermometerBand;
  verdict: string;
}

export interface DetailPanel {
  storyId: string;
  imageUrl: string;
  shareCount: number;
  distinctUsers: number;
  distinctGroups: number;
  score: number;
  scorePercent: string;
  thermometer: ThermometerBand;
  thermometerFill: number; // 0..1 of the gauge
  firstSeen: string;
  verdict: string;
  canMarkFake: boolean;
}

/** Client-side mirror of the service's 3-band rule:
 * [0, 0.33) low, [0.33, 0.66) medium, [0.66, 1] high. */
export function thermometerBand(score: number): ThermometerBand {
  if (score < 0.33) return "low";
  if (score < 0.66) return "medium";
  return "high";
}

export function formatScore(score: number): string {
  return `${(score * 100).toFixed(1)}%`;
}

export function buildCards(
  items: StoryDetail[],
  imageUrl: (storyId: string) => string,
): StoryCard[] {
  return items.map((item) => ({
    storyId: item.story_id,
    imageUrl: imageUrl(item.story_id),
    shareCount: item.share_count,
    scoreBadge: formatScore(item.fakeness_score),
    scoreBand: item.thermometer,
    verdict: item.verdict,
  }));
}

export function buildDetail(
  detail: StoryDetail,
  imageUrl: (storyId: string) => string,
): DetailPanel {
  return {
    storyId: detail.story_id,
    imageUrl: imageUrl(detail.story_id),
    shareCount: detail.share_count,
    distinctUsers: detail.distinct_users,
    distinctGroups: detail.distinct_groups,
    score: detail.fakeness_score,
    scorePercent: formatScore(detail.fakeness_score),
    thermometer: detail.thermometer,
    thermometerFill: Math.max(0, Math.min(1, detail.fakeness_score)),
    firstSeen: detail.first_seen,
    verdict: detail.verdict,
    canMarkFake: detail.verdict !== "fake",
  };
}
