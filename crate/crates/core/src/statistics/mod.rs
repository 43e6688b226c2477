//! Proxy detection with classifier two-sample tests, exact linear
//! attributions, and bias decomposition regressions.

mod decomposition;
mod two_sample;

pub use decomposition::{
    bias_decomposition, cell_bias_decomposition, coef_vcov_report, residual_regression, Block,
    Coefficient, DecompositionFit, DesignBlock, FlaggedPair, VcovReport, DEFAULT_CORRELATION_FLAG,
};
pub use two_sample::{
    auc, holm_adjust, linear_attribution, multiclass_attr_test, two_sample_test, Attribution,
    LevelTest, MulticlassResult, Statistic, TwoSampleConfig, TwoSampleResult,
};
