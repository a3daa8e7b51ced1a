import streamlit as st
from pages_ui import variants_page, pca_page, ensemble_page, planner_page

# Streamlit App Configuration
st.set_page_config(
    page_title="Imbalanced Vehicle Classification Lab",
    page_icon="🚗",
    layout="wide",
    initial_sidebar_state="expanded"
)

st.title("🚗 Imbalanced Vehicle Classification Lab")
st.markdown("---")

# Sidebar for navigation
st.sidebar.title("Navigation")
option = st.sidebar.selectbox(
    "Choose a view:",
    ["Variant distributions",
    "PCA diagnostics",
    "Ensemble comparison",
    "CNN planner"]
)

# Route to appropriate page
if option == "Variant distributions":
    variants_page.show_page()
elif option == "PCA diagnostics":
    pca_page.show_page()
elif option == "Ensemble comparison":
    ensemble_page.show_page()
elif option == "CNN planner":
    planner_page.show_page()

# Footer
st.markdown("---")
st.markdown(
    "💡 **Note**: the corpus shown here is synthetic, drawn with the per-class counts of the "
    "16-class vehicle tables. Use the `cli.py` commands to run experiments on real feature files."
)
