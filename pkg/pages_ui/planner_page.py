import pandas as pd
import streamlit as st

from modules.planner import BLOCK_KINDS, PRESETS, NetConfig, label_smoothing_loss, plan_frame, plan_network, plan_summary
from modules.plotting import plot_plan_bubbles

def show_page():
    st.header("🧱 CNN planner")

    preset = st.selectbox("Configuration", ["custom"] + list(PRESETS))

    if preset == "custom":
        col1, col2, col3 = st.columns(3)
        with col1:
            nf = st.number_input("Base filters (nf)", min_value=1, value=64, step=8)
            block_kind = st.selectbox("Block kind", BLOCK_KINDS)
        with col2:
            b1 = st.number_input("Stage 1 blocks", min_value=0, value=2, step=1)
            b2 = st.number_input("Stage 2 blocks", min_value=0, value=2, step=1)
            b3 = st.number_input("Stage 3 blocks", min_value=0, value=2, step=1)
        with col3:
            batchnorm = st.checkbox("Batch normalization", value=True)
            side = st.number_input("Input side (px)", min_value=8, value=128, step=8)
            n_classes = st.number_input("Classes", min_value=1, value=16, step=1)
        config_args = dict(nf=int(nf), block_kind=block_kind, nresb=(int(b1), int(b2), int(b3)),
                           batchnorm=batchnorm, n_classes=int(n_classes), input=(int(side), int(side), 3))
    else:
        config_args = None

    show_table = st.checkbox("Show per-layer table", value=True)

    try:
        cfg = PRESETS[preset] if config_args is None else NetConfig(**config_args)
        plan = plan_network(cfg)

        col1, col2, col3 = st.columns(3)
        with col1:
            st.metric("Parameters", f"{plan.total_params:,}")
        with col2:
            st.metric("Conv layers", plan.conv_count)
        with col3:
            st.metric("Layers", len(plan.layers))

        if show_table:
            st.dataframe(plan_frame(plan), width='stretch', hide_index=True)
        for note in plan.notes:
            st.caption(note)

        summaries = [plan_summary(name, preset_cfg) for name, preset_cfg in PRESETS.items()]
        if config_args is not None:
            summaries.append(plan_summary("custom", cfg))
        st.plotly_chart(plot_plan_bubbles(pd.DataFrame(summaries)), width='stretch')

    except Exception as e:
        st.error(f"Invalid configuration: {str(e)}")

    st.subheader("Label smoothing")
    col1, col2 = st.columns(2)
    with col1:
        epsilon = st.slider("ε", 0.0, 0.9, 0.1, 0.05)
    with col2:
        p_true = st.slider("Predicted probability of the true class", 0.01, 0.99, 0.7, 0.01)
    k = PRESETS[preset].n_classes if config_args is None else config_args["n_classes"]
    if k > 1:
        rest = (1.0 - p_true) / (k - 1)
        p = [p_true] + [rest] * (k - 1)
        st.metric("Loss", f"{label_smoothing_loss(p, 0, epsilon):.4f}")
