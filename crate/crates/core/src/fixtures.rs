//! Bundled datasets.

use crate::data::DiscreteData;

const CZECH: &str = include_str!("../data/czech_autoworkers.csv");

/// Czech autoworkers: 1841 men cross-classified by six binary risk factors
/// (smoking, strenuous mental work, strenuous physical work, systolic blood
/// pressure, beta/alpha lipoprotein ratio, family history of coronary heart
/// disease), 0 = no / low, 1 = yes / high.
pub fn czech_autoworkers() -> DiscreteData {
    let d = DiscreteData::from_csv(CZECH.as_bytes(), Some(vec![2; 6])).expect("bundled CSV parses");
    assert_eq!(
        d.n(),
        1841,
        "Czech autoworkers table must hold 1841 observations"
    );
    d
}
