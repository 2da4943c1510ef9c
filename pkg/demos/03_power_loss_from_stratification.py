"""When does stratifying the log-rank test cost real power?

Runs small Monte Carlo studies at a few event targets under the
no-prognostic-effect scenario: the stratified test pays for its 12-way split
when events are scarce, and catches up as the event target grows.

Pass --replicates to change the (default, quick) replicate count.
"""

import argparse

from stratsurv import ScenarioSpec, SimConfig, TrialDesign, aggregate, run_replicates

parser = argparse.ArgumentParser()
parser.add_argument("--replicates", type=int, default=1000)
args = parser.parse_args()

scenario = ScenarioSpec.no_prognostic()
print(f"No prognostic effect, true HR from the 80%-power design, "
      f"{args.replicates} replicates per cell\n")
print(f"{'HR':>5} {'events':>7} {'unstrat LR':>11} {'strat LR':>9} {'gap (pp)':>9}")
for hr, events in ((0.5, 66), (0.6, 120), (0.75, 380)):
    design = TrialDesign.from_event_target(true_hr=hr, target_events=events)
    cfg = SimConfig(scenario=scenario, design=design,
                    replicates=args.replicates, master_seed=314159)
    agg = aggregate(run_replicates(cfg), hr)
    lr = 100 * agg.power["lr"]
    slr = 100 * agg.power["strat_lr"]
    print(f"{hr:>5} {events:>7} {lr:>10.1f}% {slr:>8.1f}% {lr - slr:>9.1f}")

print("\nBoth tests are sized for the same nominal 80%; the gap is pure")
print("stratification cost and shrinks as the event target grows.")
