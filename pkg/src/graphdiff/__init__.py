"""Discrete denoising diffusion for simple undirected graphs."""

from .denoiser import Denoiser, DenoiserOutput, EmpiricalDenoiser
from .diffusion import noise_graph, posterior, reverse_marginal
from .graphs import Graph, GraphBatch, read_graphs, write_graphs
from .metrics import EvalConfig, MMDReport, evaluate, mmd
from .ppgn import MiniPPGNDenoiser, MiniPPGNParams, init_params
from .sampling import SampleConfig, sample_simple, sample_vb
from .schedule import NoiseSchedule, cosine_schedule, linear_schedule, make_schedule
from .training import TrainConfig, TrainResult, loss_simple, loss_vb, train

__version__ = "0.1.0"

__all__ = [
    "Denoiser",
    "DenoiserOutput",
    "EmpiricalDenoiser",
    "EvalConfig",
    "Graph",
    "GraphBatch",
    "MMDReport",
    "MiniPPGNDenoiser",
    "MiniPPGNParams",
    "NoiseSchedule",
    "SampleConfig",
    "TrainConfig",
    "TrainResult",
    "cosine_schedule",
    "evaluate",
    "init_params",
    "linear_schedule",
    "loss_simple",
    "loss_vb",
    "make_schedule",
    "mmd",
    "noise_graph",
    "posterior",
    "read_graphs",
    "reverse_marginal",
    "sample_simple",
    "sample_vb",
    "train",
    "write_graphs",
]
