import streamlit as st

from modules.plotting import plot_pca_scatter
from modules.projection import pca2_fit, projection_frame
from modules.rebalance import build_variant
from modules.ui_components import create_corpus_inputs, create_variant_inputs, load_demo_bundle, variant_spec

def show_page():
    st.header("🔭 PCA diagnostics")

    scale, n_features, spread, seed = create_corpus_inputs()
    kind, smote_k, theta, target = create_variant_inputs(key="pca")

    if st.button("Project"):
        with st.spinner("Fitting the two-component PCA..."):
            try:
                bundle = load_demo_bundle(scale, n_features, spread, seed)
                before = bundle.original.train
                after = build_variant(before, bundle.extra_train, variant_spec(kind, smote_k, theta, target, seed))

                # One basis for both panels
                model = pca2_fit(before)
                st.caption(
                    f"Explained variance: PC1 {model.explained_variance[0]:.4g}, "
                    f"PC2 {model.explained_variance[1]:.4g}"
                )

                col1, col2 = st.columns(2)
                with col1:
                    fig = plot_pca_scatter(projection_frame(model, before), bundle.class_names,
                                           title="Original training rows")
                    st.plotly_chart(fig, width='stretch')
                with col2:
                    fig = plot_pca_scatter(projection_frame(model, after), bundle.class_names,
                                           title=f"'{kind}' variant")
                    st.plotly_chart(fig, width='stretch')

            except Exception as e:
                st.error(f"Projection failed: {str(e)}")
