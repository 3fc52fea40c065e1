"""Event-stream backtesting of moving-average crossover momentum strategies."""

__version__ = "0.1.0"

from .dsl import TemplateModel, elaborate, parse_pipeline  # noqa: E402
from .generators import BrownianParams, brownian, multi_brownian, ts  # noqa: E402
from .indicators import cma, ewma, rma, wma  # noqa: E402
from .ingest import fetch_and_cache, historical, index_tickers  # noqa: E402
from .simulation import benchmark, histogram, montecarlo, pearson, scatter_matrix_data, unif  # noqa: E402
from .stream import Event, Pipeline, Processor, Source, compose, run  # noqa: E402
from .trading import Signal, cash_stock, double_maco, is_profitable, maco  # noqa: E402

__all__ = [
    "BrownianParams", "Event", "Pipeline", "Processor", "Signal", "Source", "TemplateModel", "benchmark",
    "brownian", "cash_stock", "cma", "compose", "double_maco", "elaborate", "ewma", "fetch_and_cache",
    "historical", "histogram", "index_tickers", "is_profitable", "maco", "montecarlo", "multi_brownian",
    "parse_pipeline", "pearson", "rma", "run", "scatter_matrix_data", "ts", "unif", "wma",
]
