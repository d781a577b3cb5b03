"""
plots.py - Interactive log-log rank curve (density against cumulative length)
"""

import logging
from typing import Optional

import numpy as np
import plotly.graph_objects as go

from estimator import PowerLawFit, RankCurve, curve_frame
from measure import dimension_from_rank_exponent

logger = logging.getLogger(__name__)


def rank_curve_figure(curve: RankCurve, fit: Optional[PowerLawFit] = None,
                      title: str = "Ranked street density") -> go.Figure:
    df = curve_frame(curve)
    df = df[df['nu'] > 0]
    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=df['xi'], y=df['nu'], mode='markers', name='rank curve',
        marker=dict(color='#6366f1', size=7),
    ))
    if fit is not None:
        # only the fitted range
        xs = df['xi'].to_numpy()[fit.skipped_head:]
        xs = np.geomspace(xs.min(), xs.max(), 50)
        dim = dimension_from_rank_exponent(fit.exponent)
        fig.add_trace(go.Scatter(
            x=xs, y=fit.predict(xs), mode='lines',
            name=f"fit: slope {fit.exponent:.4f}, dim {dim:.4f}, r² {fit.r_squared:.4f}",
            line=dict(color='#f59e0b', dash='dash'),
        ))
    fig.update_xaxes(type='log', title_text='cumulative length ξ')
    fig.update_yaxes(type='log', title_text='linear density ν')
    fig.update_layout(title=title, template='plotly_white', height=500)
    return fig


def plot_rank_curve(curve: RankCurve, fit: Optional[PowerLawFit], path: str) -> None:
    """Write the rank curve (and fitted line) as a standalone HTML file."""
    fig = rank_curve_figure(curve, fit)
    fig.write_html(path, include_plotlyjs='cdn', full_html=True)
    logger.info("Wrote rank curve plot to %s", path)
