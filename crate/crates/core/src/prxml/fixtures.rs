//! Small documents shared by the unit tests, the CLI tests and the
//! acceptance suite.
//!
//! `SUBTREE_XML` is the subtree rooted at `a4`. `SAMPLE_XML` is the full
//! document: `a1` with sub-regions `a2` (containing `a4` and `c4`) and `a3`
//! (containing `c5` and the MUX-bearing `a5`). Keywords are `k1`, `k2`.

pub const SUBTREE_XML: &str = r#"<a4>
  <dist type="IND">
    <c1 prob="0.5">k1</c1>
    <c2 prob="0.3">k1 k2</c2>
    <c3 prob="0.4">k2</c3>
  </dist>
</a4>
"#;

pub const SAMPLE_XML: &str = r#"<a1>
  <a2>
    <a4>
      <dist type="IND">
        <c1 prob="0.5">k1</c1>
        <c2 prob="0.3">k1 k2</c2>
        <c3 prob="0.4">k2</c3>
      </dist>
    </a4>
    <dist type="IND">
      <c4 prob="0.8">k2</c4>
    </dist>
  </a2>
  <dist type="IND">
    <a3 prob="0.8">
      <dist type="IND">
        <c5 prob="0.8">k1</c5>
      </dist>
      <a5>
        <dist type="MUX">
          <c6 prob="0.5">k2</c6>
          <c7 prob="0.3">k1 k2</c7>
          <c8 prob="0.1">k1</c8>
        </dist>
      </a5>
    </a3>
  </dist>
</a1>
"#;
