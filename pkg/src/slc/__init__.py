"""slc: a differentiable-scripting toolchain for the SL language.

Compiles SL scripts into primal and adjoint target scripts in a single
syntax-directed pass, enforces differentiability constraints at compile time
(case-convention activity, passive branch conditions), and executes the
generated code on a bundled tree-walking interpreter with taping stacks,
smoothed intrinsics and registered Monte Carlo externals.
"""

from .activity import ActivityClass, classify_symbol, propagate_variedness
from .adjointgen import CompileResult, compile_source
from .cli import GradcheckReport, RunConfig, gradcheck, run_adjoint, run_primal
from .emitter import TargetProgram, TargetSub, emit, format_stmt, output_paths, parse_target
from .errors import CompileError, CompileWarning, SLRuntimeError, TapeImbalance, TapeUnderflow
from .externals import Prng, bs_closed_form, mc, a_mc, normals
from .frontend import SourceScript, Token, parse, tokenize
from .interp import Interpreter
from .runtime import SmoothingConfig, TapeStacks, d_exp, d_gt0, gt0

__version__ = "0.1.0"

__all__ = [
    "ActivityClass",
    "CompileError",
    "CompileResult",
    "CompileWarning",
    "GradcheckReport",
    "Interpreter",
    "Prng",
    "RunConfig",
    "SLRuntimeError",
    "SmoothingConfig",
    "SourceScript",
    "TapeImbalance",
    "TapeStacks",
    "TapeUnderflow",
    "TargetProgram",
    "TargetSub",
    "Token",
    "a_mc",
    "bs_closed_form",
    "classify_symbol",
    "compile_source",
    "d_exp",
    "d_gt0",
    "emit",
    "format_stmt",
    "gradcheck",
    "gt0",
    "mc",
    "normals",
    "output_paths",
    "parse",
    "parse_target",
    "propagate_variedness",
    "run_adjoint",
    "run_primal",
    "tokenize",
]
