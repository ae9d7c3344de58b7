from .client import RoundMetrics, request_answer, simulate_round
from .server import AnswerServer, handle_frame, serve, start_background

__all__ = ["RoundMetrics", "request_answer", "simulate_round",
           "AnswerServer", "handle_frame", "serve", "start_background"]
