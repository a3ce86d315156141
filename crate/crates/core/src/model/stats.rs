use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Dataset, Language};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub questions: usize,
    /// Distinct gold SQL strings, compared after whitespace normalization.
    pub unique_queries: usize,
    /// Databases referenced by at least one example.
    pub databases: usize,
    pub tables: usize,
    pub columns: usize,
    pub unparsable_gold: usize,
    pub by_language: BTreeMap<Language, usize>,
}

/// Counts over the union of the given datasets.
pub fn dataset_stats(datasets: &[&Dataset]) -> DatasetStats {
    let mut stats = DatasetStats::default();
    let mut queries = BTreeSet::new();
    let mut dbs: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for ds in datasets {
        for e in &ds.examples {
            stats.questions += 1;
            *stats.by_language.entry(e.language).or_default() += 1;
            if e.gold_error.is_some() {
                stats.unparsable_gold += 1;
            }
            queries.insert(e.gold_sql.split_whitespace().collect::<Vec<_>>().join(" "));
            if let Some(schema) = ds.schemas.get(&e.db_id) {
                dbs.entry(e.db_id.as_str())
                    .or_insert((schema.tables.len(), schema.column_count()));
            }
        }
    }
    stats.unique_queries = queries.len();
    stats.databases = dbs.len();
    stats.tables = dbs.values().map(|v| v.0).sum();
    stats.columns = dbs.values().map(|v| v.1).sum();
    stats
}
