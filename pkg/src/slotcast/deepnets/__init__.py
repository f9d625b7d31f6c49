"""LSTM regressor, 1-D CNN weekly forecasters, Adam, weekly framing and the multi-round harness."""
from .adam import Adam, AdamState, adam_step
from .cnn import CNNForecaster, build_cnn
from .framing import FramedData, WeekTable, audit_leakage, frame_weekly, walk_forward, weekly_table
from .harness import MultiRoundReport, cnn_fit_eval
from .lstm import LSTMRegressor, LstmReport, lstm_experiment

__all__ = [
    "Adam", "AdamState", "adam_step", "CNNForecaster", "build_cnn", "FramedData", "WeekTable",
    "audit_leakage", "frame_weekly", "walk_forward", "weekly_table", "MultiRoundReport", "cnn_fit_eval",
    "LSTMRegressor", "LstmReport", "lstm_experiment",
]
