"""Online detection strategies turning window verdicts into gesture intervals."""
from .baseline import apply_thresholds, calibrate_thresholds, variable_window_detect
from .fsm import FsmConfig, FsmState, Phase, fsm_step, run_fsm
from .proposal import (
    ProposalWindow,
    decode_targets,
    energy_proposals,
    match_and_fuse,
    regression_targets,
)
from .voting import VoteAccumulator, chunks_to_predictions, postprocess_chunks, vote_labels, vote_stream

__all__ = [
    "FsmConfig", "FsmState", "Phase", "ProposalWindow", "VoteAccumulator",
    "apply_thresholds", "calibrate_thresholds", "chunks_to_predictions", "decode_targets",
    "energy_proposals", "fsm_step", "match_and_fuse", "postprocess_chunks", "regression_targets",
    "run_fsm", "variable_window_detect", "vote_labels", "vote_stream",
]
