import plotly.graph_objects as go

from .projection import PALETTE


def _color(index):
    return PALETTE[index % len(PALETTE)]


def plot_class_distributions(counts):
    """Per-class sample counts, one line per dataset variant.

    counts: DataFrame indexed by class name, one column per variant.
    """
    fig = go.Figure()

    for i, variant in enumerate(counts.columns):
        fig.add_trace(go.Scatter(
            x=list(counts.index),
            y=counts[variant],
            mode='lines+markers',
            line=dict(color=_color(i)),
            name=str(variant)
        ))

    fig.update_layout(
        title='Class distribution per dataset variant',
        xaxis_title="Class",
        yaxis_title="Samples",
        font_family="Arial",
        font_color="black",
        hovermode='x unified'
    )

    return fig

def plot_pca_scatter(frame, class_names, title='PCA projection'):
    """Scatter of a projection_frame; synthetic rows drawn as faded crosses"""
    fig = go.Figure()

    for c, name in enumerate(class_names):
        rows = frame[frame['label'] == name]
        if rows.empty:
            continue
        real = rows[~rows['is_synthetic']]
        synthetic = rows[rows['is_synthetic']]
        fig.add_trace(go.Scattergl(
            x=real['pc1'],
            y=real['pc2'],
            mode='markers',
            marker=dict(color=_color(c), size=4),
            name=name
        ))
        if not synthetic.empty:
            fig.add_trace(go.Scattergl(
                x=synthetic['pc1'],
                y=synthetic['pc2'],
                mode='markers',
                marker=dict(color=_color(c), size=4, symbol='x', opacity=0.4),
                name=f'{name} (synthetic)',
                showlegend=False
            ))

    fig.update_layout(
        title=title,
        xaxis_title="PC1",
        yaxis_title="PC2",
        font_family="Arial",
        font_color="black"
    )

    return fig

def plot_per_class_accuracy(per_class):
    """Grouped bars of per-class accuracy, one group member per configuration.

    per_class: the per-class sidecar frame (configuration, class, accuracy).
    """
    fig = go.Figure()

    for i, (name, rows) in enumerate(per_class.groupby('configuration', sort=False)):
        fig.add_trace(go.Bar(
            x=rows['class'],
            y=rows['accuracy'],
            marker_color=_color(i),
            name=str(name)
        ))

    fig.update_layout(
        title="Per-class accuracy",
        xaxis_title="Class",
        yaxis_title="Accuracy",
        yaxis_range=[0, 1],
        barmode='group'
    )

    return fig

def plot_roc_curves(report):
    """One-vs-rest ROC curve of every scoreable class in an EvalReport"""
    fig = go.Figure()

    for c, (name, points, auc) in enumerate(zip(report.class_names, report.roc, report.auc)):
        if points is None:
            continue
        fig.add_trace(go.Scatter(
            x=points[:, 0],
            y=points[:, 1],
            mode='lines',
            line=dict(color=_color(c)),
            name=f'{name} (AUC {auc:.3f})'
        ))

    # Chance
    fig.add_trace(go.Scatter(
        x=[0, 1],
        y=[0, 1],
        mode='lines',
        line=dict(color='grey', dash='dash'),
        showlegend=False
    ))

    fig.update_layout(
        title=f'ROC curves - {report.eval_set_name}',
        xaxis_title='False positive rate',
        yaxis_title='True positive rate'
    )

    return fig

def plot_tuning_curve(curve, axis):
    """OOB, validation and test accuracy of a forest_tuning_curve frame"""
    fig = go.Figure()

    styles = {'oob': ('purple', 'dot'), 'val': ('blue', 'solid'), 'test': ('red', 'dash')}
    for column, (color, dash) in styles.items():
        if curve[column].isna().all():
            continue
        fig.add_trace(go.Scatter(
            x=curve[axis],
            y=curve[column],
            mode='lines+markers',
            line=dict(color=color, dash=dash),
            name=column.upper() if column == 'oob' else column.capitalize()
        ))

    fig.update_layout(
        title=f'Random forest accuracy vs {axis}',
        xaxis_title=axis,
        yaxis_title='Accuracy',
        hovermode='x unified'
    )

    return fig

def plot_depth_study(table):
    """Heatmap of per-class accuracy (rows) against base-learner depth (columns)"""
    fig = go.Figure(data=go.Heatmap(
        z=table.values,
        x=list(table.columns),
        y=list(table.index),
        colorscale='Viridis',
        zmin=0,
        zmax=1
    ))

    fig.update_layout(
        title='AdaBoost per-class accuracy by base-learner depth',
        xaxis_title='Base learner',
        yaxis_title='Class'
    )

    return fig

def plot_plan_bubbles(summaries):
    """Weight-layer depth vs filters, bubble area scaled by parameter count"""
    largest = summaries['total_params'].max()
    fig = go.Figure(data=[
        go.Scatter(
            x=summaries['depth'],
            y=summaries['nf'],
            mode='markers+text',
            text=summaries['name'],
            textposition='top center',
            marker=dict(
                size=summaries['total_params'],
                sizemode='area',
                sizeref=2.0 * largest / (60.0 ** 2),
                color=[_color(i) for i in range(len(summaries))]
            ),
            customdata=summaries['total_params'],
            hovertemplate='%{text}<br>depth %{x}<br>nf %{y}<br>%{customdata:,} params<extra></extra>'
        )
    ])

    fig.update_layout(
        title="CNN configurations: depth, width and parameter count",
        xaxis_title="Weight layers",
        yaxis_title="Filters (nf)",
        showlegend=False
    )

    return fig
