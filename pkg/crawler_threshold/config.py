from dataclasses import dataclass

try:
    import psutil

    default_num_workers = psutil.cpu_count(False) or 4
except ImportError:
    default_num_workers = 4


@dataclass
class CrawlerThresholdConfig:
    # Largest total state count a generator may have
    max_states: int = 20000
    # Largest dimension assemble_dense will materialize
    dense_cap: int = 20000
    validation_tolerance: float = 1e-9
    repair_cap: float = 0.1
    residual_tolerance: float = 1e-9
    negative_tolerance: float = 1e-14
    solve_tolerance: float = 1e-10
    # P_success or P_obs below this leaves the conditional sojourn undefined
    degenerate_tolerance: float = 1e-14
    num_workers: int = default_num_workers
    scheduler: str = "threads"


config = CrawlerThresholdConfig()
