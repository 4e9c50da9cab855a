"""Thresholding bandits under local differential privacy."""
from .env import (DiscreteLaw, GapProfile, Instance, PrivatizedView, Setting, fb_hard_env,
                  fc_flip_env, gap_profile, make_instance, privatized_view, sample_reward)
from .fixed_budget import FBResult, FBState, compute_index, fb_loss, run_fixed_budget
from .fixed_confidence import FCResult, fc_correct, radius, run_fixed_confidence
from .harness import ExperimentConfig, FixedBudgetSetting, FixedConfidenceSetting, Report, \
    derive_stream, exact_fb_oracle, monte_carlo
from .privacy import bern_param, dp_ratio_audit, private_mean, privatize

__version__ = "0.1.0"
