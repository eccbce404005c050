/** UI configuration: display thresholds and request defaults. */

import type { AutoRequest } from "./api.js";

export interface BadgeThresholds {
  high: number;
  medium: number;
}

export interface UiConfig {
  /** Candidate generator used when a token is clicked. */
  generator: string;
  /** How many candidates to request per menu. */
  candidateLimit: number;
  /** Semantic-similarity badge cut-offs applied to the generator score. */
  badge: BadgeThresholds;
  /**
   * Generators whose score is a semantic similarity; only their menus show
   * a badge (language-model generators report scores on other scales).
   */
  similarityGenerators: readonly string[];
  /** Defaults for the automatic attack run. */
  auto: AutoRequest;
}

export const DEFAULT_CONFIG: UiConfig = {
  generator: "ws",
  candidateLimit: 10,
  badge: { high: 0.8, medium: 0.5 },
  similarityGenerators: ["ws"],
  auto: { generator: "ws", mode: "loop_check", seed: 0 },
};
