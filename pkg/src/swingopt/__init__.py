"""Commodity futures smile calibration and swing option pricing."""

from .backend import backend_name, set_num_threads
from .calibrate import (CalibrationReport, CalibrationTarget, CsoTarget,
                        FixedPointConfig, anderson_step, calibrate_local_vol,
                        calibrate_mean_reversion)
from .contracts import (ConsumptionGrid, FixedStrike, FloatingStrike, SwingContract,
                        admissible_actions, build_grid, global_bounds)
from .lsmc import PricingResult, RegressionCoeffs, backward_regression, forward_price, price_swing
from .lvmodel import (DeliveryRemap, LocalVolSurface, ModelParams, eta_delta, eta_F,
                      futures_closed_form, k_F, link_smiles, period_futures_closed_form,
                      relative_remap, remap_G, sde_coefficients, spot_delta)
from .market import (DAY, DeliveryPeriod, DiscountCurve, InitialCurve, ONE_DAY,
                     VanillaQuote, black76_call, implied_vol, load_curve, load_quotes,
                     period_futures, synth_quotes)
from .pde import (NormalizedCallSurface, PdeGrid, model_iv, option_on_futures,
                  solve_dupire, solve_dupire_remapped, vol_drop)
from .ppo import PolicyParams, SwingEnv, TrainConfig, compute_gae, ppo_update, price_with_policy, train
from .simulate import (FixingSet, PathSet, SimulationSchedule, day_ahead_fixings,
                       floating_strikes, simulate_spot)
from .spikes import (SpikeParams, SpikePath, h, simulate_spike_path,
                     spike_adjusted_spot, spike_instant_futures, spike_period_futures)

__version__ = "0.1.0"
