/** Wire types mirrored from the service's JSON responses. */

export interface PairwiseView {
  loser: string;
  margin: number;
  p_a: number;
  relevant_fraction: number;
}

export interface ContestView {
  contest_id: string;
  tallies: Record<string, number>;
  total_ballots_cast: number;
  reported_winner: string;
  results_csv: string;
  has_manifest: boolean;
  pairwise: PairwiseView[];
}

export interface PlanView {
  loser: string;
  pair_cumulative_n: number;
  cumulative_n: number;
  kmin: number;
  stop_prob: number;
  misleading_prob: number | null;
  binding_constraint: "target_p" | "misleading_limit";
  first_round: boolean;
}

export interface PairVerdict {
  loser: string;
  decision: "Correct" | "Undetermined";
  measured_risk: number;
  kmin: number;
  misleading_now: boolean;
  pair_cumulative_n: number;
  pair_cumulative_k: number;
}

export interface VerdictView {
  decision: "Correct" | "Undetermined";
  measured_risk: number;
  misleading_now: boolean;
  pairwise: PairVerdict[];
}

export interface RoundRecordView {
  round_index: number;
  cumulative_n: number;
  tallies: Record<string, number>;
  selection_order: number[] | null;
  verdict: VerdictView | null;
  plan: PlanView | null;
  correction: boolean;
}

export interface SessionView {
  session_id: string;
  contest_id: string;
  alpha: number;
  audit_kind: string;
  seed: number;
  created_at: string;
  status: string;
  version: number;
  schedule: number[] | null;
  rounds: RoundRecordView[];
}

export interface SoChart {
  ballot: number[];
  cumulative_winner_tally: number[];
  stopping_threshold: number[];
  first_crossing: number | null;
}

export interface RoundResponse {
  verdict: VerdictView;
  session: SessionView;
  so_chart?: SoChart;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
