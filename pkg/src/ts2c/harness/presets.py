"""Desk-scale settings sized for one CPU core.

The library defaults (hidden [256, 256], lr 1e-4, 50k warmup steps, 10
members) suit long runs; the desk preset shrinks networks and budgets so a
full experiment grid finishes on one core.
"""

SAC_PRESETS = {
    "full": {},
    "desk": {
        "hidden": [64, 64],
        "lr": 1e-3,
        "batch_size": 128,
        "init_alpha": 0.2,
        "learning_starts": 1000,
        "random_steps": 1000,
    },
}
