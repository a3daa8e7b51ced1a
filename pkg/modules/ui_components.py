import streamlit as st

from modules.data import SOURCE_TEST_COUNTS, SOURCE_TRAIN_COUNTS, corpus_dataset, scale_counts
from modules.experiment import build_bundle
from modules.rebalance import VARIANT_KINDS, VariantSpec


def create_corpus_inputs():
    """Inputs for the synthetic corpus shaped like the 16-class vehicle tables"""
    col1, col2 = st.columns(2)

    with col1:
        scale = st.slider("Downscale factor", 1, 100, 20, 1,
                          help="Every per-source class count is divided by this factor")
        n_features = st.number_input("Feature dimension", min_value=2, max_value=64, value=8, step=1)

    with col2:
        spread = st.slider("Cluster spread", 0.1, 5.0, 1.5, 0.1)
        seed = int(st.number_input("Seed", min_value=0, value=0, step=1))

    return scale, int(n_features), spread, seed

@st.cache_resource(show_spinner=False)
def load_demo_bundle(scale, n_features, spread, seed):
    """Original (source 1) and extra (sources 2-3) rows plus matching test sets, split 80/20"""
    train_counts = scale_counts(SOURCE_TRAIN_COUNTS, scale)
    test_counts = scale_counts(SOURCE_TEST_COUNTS, scale)
    original = corpus_dataset(train_counts, (1,), n_features, seed, spread)
    extra = corpus_dataset(train_counts, (2, 3), n_features, seed, spread)
    test_original = corpus_dataset(test_counts, (1,), n_features, seed, spread, stream=1)
    test_extra = corpus_dataset(test_counts, (2, 3), n_features, seed, spread, stream=1)
    return build_bundle(original, extra, test_original, test_extra, seed=seed)

def create_variant_inputs(key="variant"):
    """Variant kind and its resampling parameters"""
    col1, col2, col3, col4 = st.columns(4)

    with col1:
        kind = st.selectbox("Training variant", VARIANT_KINDS, index=2, key=f"{key}_kind")
    with col2:
        smote_k = st.number_input("SMOTE k", min_value=1, max_value=20, value=5, step=1, key=f"{key}_k")
    with col3:
        theta = st.slider("Partial θ", 0.05, 1.0, 0.25, 0.05, key=f"{key}_theta")
    with col4:
        target = st.number_input("Balanced target", min_value=1, value=100, step=10, key=f"{key}_target")

    return kind, int(smote_k), theta, int(target)

def variant_spec(kind, smote_k, theta, target, seed):
    return VariantSpec(kind, smote_k, theta, target, seed)

def create_forest_inputs(key="forest"):
    col1, col2, col3 = st.columns(3)

    with col1:
        n_estimators = st.slider("Trees", 5, 300, 50, 5, key=f"{key}_n")
    with col2:
        max_samples = st.slider("Bootstrap fraction", 0.1, 1.0, 0.75, 0.05, key=f"{key}_ms")
    with col3:
        max_depth = st.number_input("Max depth (0 = unlimited)", min_value=0, value=0, step=1, key=f"{key}_depth")

    return {"n_estimators": n_estimators, "max_samples": max_samples, "max_depth": int(max_depth) or None}

def create_boost_inputs(key="adaboost"):
    col1, col2, col3 = st.columns(3)

    with col1:
        n_estimators = st.slider("Boosting rounds", 5, 200, 50, 5, key=f"{key}_n")
    with col2:
        learning_rate = st.select_slider("Learning rate", [1e-3, 1e-2, 5e-2, 0.1, 0.2, 0.5, 0.7, 1.0],
                                         value=0.5, key=f"{key}_lr")
    with col3:
        max_depth = st.slider("Base tree depth", 1, 10, 3, 1, key=f"{key}_depth")

    return {"n_estimators": n_estimators, "learning_rate": learning_rate, "max_depth": max_depth}

def display_accuracy_summary(row, pools):
    """One metric per pool and split of a compare_models/gridsearch row"""
    columns = st.columns(2 * len(pools))

    for i, pool in enumerate(pools):
        for j, split in enumerate(("val", "test")):
            value = row.get(f"{pool}_{split}")
            with columns[2 * i + j]:
                st.metric(f"{pool.capitalize()} {split}", "n/a" if value is None else f"{value:.4f}")
