import pandas as pd
import streamlit as st

from modules.data import class_distribution
from modules.experiment import build_variants
from modules.plotting import plot_class_distributions
from modules.rebalance import VARIANT_KINDS, VariantSpec, variant_manifest
from modules.ui_components import create_corpus_inputs, create_variant_inputs, load_demo_bundle

def show_page():
    st.header("📊 Variant distributions")

    st.subheader("Synthetic corpus")
    scale, n_features, spread, seed = create_corpus_inputs()

    st.subheader("Resampling parameters")
    _, smote_k, theta, target = create_variant_inputs(key="variants")

    show_manifests = st.checkbox("Show variant manifests")

    if st.button("Build variants"):
        with st.spinner("Building the six training variants..."):
            try:
                bundle = load_demo_bundle(scale, n_features, spread, seed)
                base = VariantSpec("original", smote_k, theta, target, seed)
                variants = build_variants(bundle, VARIANT_KINDS, base)

                counts = pd.DataFrame({
                    kind: class_distribution(ds).as_series(bundle.class_names)
                    for kind, ds in variants.items()
                    if not isinstance(ds, Exception)
                })
                for kind, ds in variants.items():
                    if isinstance(ds, Exception):
                        st.warning(f"{kind}: {ds}")

                st.plotly_chart(plot_class_distributions(counts), width='stretch')

                col1, col2 = st.columns(2)
                with col1:
                    st.metric("Original training rows", f"{bundle.original.train.n_samples:,}")
                with col2:
                    st.metric("Extra training rows", f"{bundle.extra_train.n_samples:,}")

                st.dataframe(counts, width='stretch')

                if show_manifests:
                    for kind, ds in variants.items():
                        if isinstance(ds, Exception):
                            continue
                        spec = VariantSpec(kind, smote_k, theta, target, seed)
                        with st.expander(kind):
                            st.json(variant_manifest(bundle.original.train, ds, spec))

            except Exception as e:
                st.error(f"Could not build the variants: {str(e)}")
