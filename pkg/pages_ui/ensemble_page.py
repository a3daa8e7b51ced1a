import streamlit as st

from modules.ensemble import fit_voting
from modules.experiment import compare_models, depth_study, fit_family, forest_tuning_curve
from modules.plotting import plot_depth_study, plot_per_class_accuracy, plot_roc_curves, plot_tuning_curve
from modules.rebalance import build_variant
from modules.reporting import per_class_sidecar
from modules.ui_components import (
    create_boost_inputs,
    create_corpus_inputs,
    create_forest_inputs,
    create_variant_inputs,
    display_accuracy_summary,
    load_demo_bundle,
    variant_spec,
)

def show_page():
    st.header("🌲 Ensemble comparison")

    st.subheader("Data")
    scale, n_features, spread, seed = create_corpus_inputs()
    kind, smote_k, theta, target = create_variant_inputs(key="ensemble")

    st.subheader("Random forest")
    forest_params = create_forest_inputs()

    st.subheader("AdaBoost (SAMME)")
    boost_params = create_boost_inputs()

    st.subheader("Soft voting")
    col1, col2 = st.columns(2)
    with col1:
        w_forest = st.slider("Forest weight", 0.0, 1.0, 0.5, 0.05)
    with col2:
        w_boost = st.slider("AdaBoost weight", 0.0, 1.0, 0.5, 0.05)

    eval_set = st.selectbox("Per-class and ROC view", ["original/val", "original/test", "combined/val", "combined/test"])
    roc_model = st.selectbox("ROC curves for", ["voting", "random_forest", "adaboost"])
    show_curve = st.checkbox("Forest tuning curve (number of trees)")
    show_depths = st.checkbox("AdaBoost depth study")

    if st.button("🚀 Train and compare", key="run_ensemble"):
        with st.spinner("Training forest, AdaBoost and voting models..."):
            try:
                bundle = load_demo_bundle(scale, n_features, spread, seed)
                train_ds = build_variant(bundle.original.train, bundle.extra_train,
                                         variant_spec(kind, smote_k, theta, target, seed))

                forest = fit_family("forest", forest_params, train_ds, seed)
                boost = fit_family("adaboost", boost_params, train_ds, seed)
                models = {
                    "random_forest": forest,
                    "adaboost": boost,
                    "voting": fit_voting([forest, boost], (w_forest, w_boost)),
                }
                table, reports = compare_models(models, bundle)

                for _, row in table.iterrows():
                    st.markdown(f"**{row['configuration']}**")
                    display_accuracy_summary(row.to_dict(), list(bundle.pools))
                st.dataframe(table, width='stretch', hide_index=True)

                pool, split = eval_set.split("/")
                per_class = per_class_sidecar(reports)
                st.plotly_chart(plot_per_class_accuracy(per_class[per_class["eval_set"] == eval_set]),
                                width='stretch')

                st.plotly_chart(plot_roc_curves(reports[roc_model][(pool, split)]), width='stretch')

                if show_curve:
                    curve = forest_tuning_curve(bundle, train_ds, "n_estimators", [10, 25, 50, 100],
                                                {**forest_params}, seed)
                    st.plotly_chart(plot_tuning_curve(curve, "n_estimators"), width='stretch')

                if show_depths:
                    study = depth_study(bundle, train_ds, range(1, 6), boost_params, seed)
                    st.plotly_chart(plot_depth_study(study), width='stretch')

            except Exception as e:
                st.error(f"Training failed: {str(e)}")
