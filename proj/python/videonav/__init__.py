"""Hierarchical long-video navigation toolkit."""

from ._core import (
    ConfigError,
    Corpus,
    DomainError,
    Error,
    ParseError,
    PathError,
    ValidationError,
    caption_word_budget,
    clipped_surrogate,
    derive_width,
    evaluate,
    evaluate_toy,
    expected_captions,
    frame_budget,
    group_advantages,
    interval_of,
    location_reward,
    merge_intervals,
    modeled_cost,
    parse_action,
    render_tool_call,
    resolution,
    run_episode,
    train_toy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
