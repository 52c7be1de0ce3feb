//! Transaction data, cross-validation folds and the warehouse rules.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::partition::Assignment;
use crate::rng::{derive_seed, rng_from_seed};
use crate::rules::{Rule, RuleFile};

/// A catalog of item names and the transactions over it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionSet {
    items: Vec<String>,
    transactions: Vec<Vec<usize>>,
}

impl TransactionSet {
    /// Builds a set from transactions of names; the catalog is in
    /// first-appearance order and repeated items within a transaction collapse.
    pub fn from_names<S: AsRef<str>>(transactions: &[Vec<S>]) -> Result<Self> {
        let mut set = Self::default();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (t, names) in transactions.iter().enumerate() {
            let mut items = Vec::with_capacity(names.len());
            for name in names {
                let name = name.as_ref();
                if name.is_empty() {
                    return Err(Error::Parse { line: t + 1, message: "empty item name".into() });
                }
                let id = *index.entry(name.to_string()).or_insert_with(|| {
                    set.items.push(name.to_string());
                    set.items.len() - 1
                });
                if !items.contains(&id) {
                    items.push(id);
                }
            }
            if items.is_empty() {
                return Err(Error::Parse { line: t + 1, message: "empty transaction".into() });
            }
            set.transactions.push(items);
        }
        Ok(set)
    }

    /// Parses one transaction per line, items separated by commas. Blank
    /// lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut set = Self::default();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut items = Vec::new();
            for token in line.split(',') {
                let name = token.trim();
                if name.is_empty() {
                    return Err(Error::Parse { line: lineno + 1, message: "empty item name".into() });
                }
                let id = *index.entry(name.to_string()).or_insert_with(|| {
                    set.items.push(name.to_string());
                    set.items.len() - 1
                });
                if !items.contains(&id) {
                    items.push(id);
                }
            }
            set.transactions.push(items);
        }
        if set.transactions.is_empty() {
            return Err(Error::EmptyFile);
        }
        Ok(set)
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        Self::parse(&text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.transactions {
            let names: Vec<&str> = t.iter().map(|&i| self.items[i].as_str()).collect();
            writeln!(out, "{}", names.join(","))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn transactions(&self) -> &[Vec<usize>] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn item_index(&self, name: &str) -> Option<usize> {
        self.items.iter().position(|n| n == name)
    }

    /// Mean and (population) standard deviation of transaction sizes.
    pub fn size_stats(&self) -> (f64, f64) {
        let n = self.transactions.len() as f64;
        let mean = self.transactions.iter().map(|t| t.len() as f64).sum::<f64>() / n;
        let var = self.transactions.iter().map(|t| (t.len() as f64 - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

/// Assignment of transactions to `k` folds, one of which trains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    fold_of: Vec<usize>,
    train_fold: usize,
}

#[derive(Serialize, Deserialize)]
struct FoldRow {
    transaction_id: usize,
    fold: usize,
}

impl FoldPlan {
    /// Shuffled folds of near-equal size; the training fold is drawn too.
    pub fn random(transactions: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > transactions.max(1) {
            return Err(Error::Config(format!("cannot split {transactions} transactions into {k} folds")));
        }
        let mut rng = rng_from_seed(seed);
        let mut order: Vec<usize> = (0..transactions).collect();
        order.shuffle(&mut rng);
        let mut fold_of = vec![0; transactions];
        for (pos, &t) in order.iter().enumerate() {
            fold_of[t] = pos % k;
        }
        let train_fold = rng.random_range(0..k);
        Ok(Self { k, fold_of, train_fold })
    }

    pub fn new(k: usize, fold_of: Vec<usize>, train_fold: usize) -> Result<Self> {
        if k == 0 || train_fold >= k || fold_of.iter().any(|&f| f >= k) {
            return Err(Error::Config("fold indices out of range".into()));
        }
        Ok(Self { k, fold_of, train_fold })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn train_fold(&self) -> usize {
        self.train_fold
    }

    pub fn is_train(&self, transaction: usize) -> bool {
        self.fold_of[transaction] == self.train_fold
    }

    pub fn train(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.fold_of.len()).filter(|&t| self.is_train(t))
    }

    pub fn test(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.fold_of.len()).filter(|&t| !self.is_train(t))
    }

    /// CSV `transaction_id,fold`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for (transaction_id, &fold) in self.fold_of.iter().enumerate() {
            writer.serialize(FoldRow { transaction_id, fold })?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, k: usize, train_fold: usize) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut fold_of = Vec::new();
        for (expected, row) in reader.deserialize().enumerate() {
            let row: FoldRow = row?;
            if row.transaction_id != expected {
                return Err(Error::Parse {
                    line: expected + 2,
                    message: format!("expected transaction {expected}, found {}", row.transaction_id),
                });
            }
            fold_of.push(row.fold);
        }
        Self::new(k, fold_of, train_fold)
    }
}

/// How a multi-item transaction becomes pairwise requests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestMode {
    /// Every unordered pair of items.
    #[default]
    AllPairs,
    /// One uniformly drawn pair per transaction.
    OneRandomPair,
}

/// Requests from the training fold, in seed-shuffled order. Transactions
/// with fewer than two items contribute nothing.
pub fn transactions_to_requests(
    ts: &TransactionSet,
    plan: &FoldPlan,
    mode: RequestMode,
    seed: u64,
) -> Vec<(usize, usize)> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    for t in plan.train() {
        let items = &ts.transactions[t];
        if items.len() < 2 {
            continue;
        }
        match mode {
            RequestMode::AllPairs => {
                for (a, &i) in items.iter().enumerate() {
                    for &j in &items[a + 1..] {
                        out.push((i, j));
                    }
                }
            }
            RequestMode::OneRandomPair => {
                let a = rng.random_range(0..items.len());
                let mut b = rng.random_range(0..items.len() - 1);
                if b >= a {
                    b += 1;
                }
                out.push((items[a], items[b]));
            }
        }
    }
    out.shuffle(&mut rng);
    out
}

/// Number of warehouse sections.
pub const WAREHOUSE_SECTIONS: usize = 13;

/// Items named by the warehouse rules.
pub const RULE_ITEMS: [&str; 7] = [
    "shopping bags",
    "whole milk",
    "rolls/buns",
    "tropical fruit",
    "white wine",
    "specialty chocolate",
    "yogurt",
];

/// Section names: the three reserved ones, then `section-4` .. `section-13`.
pub fn warehouse_section_names() -> Vec<String> {
    let mut names: Vec<String> = ["entrance", "counter", "cooler"].iter().map(|s| s.to_string()).collect();
    names.extend((4..=WAREHOUSE_SECTIONS).map(|k| format!("section-{k}")));
    names
}

/// The five warehouse placement rules as a constraint file.
pub fn warehouse_rule_file(capacity: usize) -> RuleFile {
    let sections = warehouse_section_names();
    let s = |x: &str| x.to_string();
    let not_cooler: Vec<String> = sections.iter().filter(|n| *n != "cooler").cloned().collect();
    RuleFile {
        capacities: Some(vec![capacity]),
        rules: vec![
            Rule::Allow(s("shopping bags"), vec![s("entrance"), s("counter")]),
            Rule::Cannot(s("whole milk"), s("rolls/buns")),
            Rule::Cannot(s("whole milk"), s("tropical fruit")),
            Rule::Cannot(s("rolls/buns"), s("tropical fruit")),
            Rule::Must(s("white wine"), s("specialty chocolate")),
            Rule::Allow(s("yogurt"), vec![s("cooler")]),
            Rule::Allow(s("tropical fruit"), not_cooler),
        ],
        sections: Some(sections),
    }
}

/// The warehouse rules resolved against `catalog`.
pub fn warehouse_constraints(catalog: &[String]) -> Result<ConstraintSet> {
    warehouse_rule_file(catalog.len() / WAREHOUSE_SECTIONS).resolve(Some(catalog))
}

/// `2^v` for a transaction touching `v` distinct partitions.
pub fn trip_cost(a: &Assignment, transaction: &[usize]) -> Result<u64> {
    let mut seen: Vec<usize> = Vec::with_capacity(transaction.len());
    for &item in transaction {
        if item >= a.len() {
            return Err(Error::UnassignedItem(item));
        }
        let l = a.label(item);
        if !seen.contains(&l) {
            seen.push(l);
        }
    }
    Ok(1u64 << seen.len())
}

/// Mean trip cost over the given transactions.
pub fn mean_trip_cost(a: &Assignment, ts: &TransactionSet, transactions: impl Iterator<Item = usize>) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for t in transactions {
        sum += trip_cost(a, &ts.transactions[t])? as f64;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Shape of the synthetic stand-in for the groceries data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticBasketConfig {
    pub items: usize,
    pub transactions: usize,
    /// Hidden co-purchase groups (items are dealt round-robin).
    pub groups: usize,
    pub mean_size: f64,
    pub std_size: f64,
    pub max_size: usize,
    /// Chance that an item comes from the transaction's home group.
    pub cohesion: f64,
    /// Popularity of the item with rank `k` is `(k + 1)^-zipf`.
    pub zipf: f64,
}

impl Default for SyntheticBasketConfig {
    fn default() -> Self {
        Self {
            items: 169,
            transactions: 9835,
            groups: 13,
            mean_size: 4.4,
            std_size: 3.5,
            max_size: 32,
            cohesion: 0.7,
            zipf: 0.8,
        }
    }
}

/// Generates baskets with planted co-purchase groups. The first items of
/// the catalog carry the names used by the warehouse rules.
pub fn synthetic_groceries(cfg: &SyntheticBasketConfig, seed: u64) -> Result<TransactionSet> {
    if cfg.items < RULE_ITEMS.len() || cfg.groups == 0 || cfg.mean_size <= 1.0 || cfg.max_size == 0 {
        return Err(Error::Config("synthetic basket configuration out of range".into()));
    }
    let items: Vec<String> = (0..cfg.items)
        .map(|i| RULE_ITEMS.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("item-{:03}", i + 1)))
        .collect();
    let popularity: Vec<f64> = (0..cfg.items).map(|i| ((i + 1) as f64).powf(-cfg.zipf)).collect();
    let members: Vec<Vec<usize>> = (0..cfg.groups).map(|g| (g..cfg.items).step_by(cfg.groups).collect()).collect();
    let group_weight: Vec<f64> = members.iter().map(|m| m.iter().map(|&i| popularity[i]).sum()).collect();
    let total_pop: f64 = popularity.iter().sum();

    // size = 1 + NegBin(mean - 1, var) drawn as a gamma-poisson mixture
    let extra_mean = cfg.mean_size - 1.0;
    let var = cfg.std_size * cfg.std_size;
    let scale = (var / extra_mean - 1.0).max(1e-6);
    let shape = extra_mean / scale;
    let gamma = Gamma::new(shape, scale).map_err(|e| Error::Config(e.to_string()))?;

    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let pick = |rng: &mut crate::rng::SolverRng, pool: &[usize], total: f64| -> usize {
        let mut u = rng.random::<f64>() * total;
        for &i in pool {
            u -= popularity[i];
            if u < 0.0 {
                return i;
            }
        }
        *pool.last().expect("non-empty pool")
    };
    let all: Vec<usize> = (0..cfg.items).collect();
    let group_total: f64 = group_weight.iter().sum();
    let mut transactions = Vec::with_capacity(cfg.transactions);
    for _ in 0..cfg.transactions {
        let lambda: f64 = gamma.sample(&mut rng);
        let extra = if lambda > 0.0 {
            Poisson::new(lambda).map(|p| p.sample(&mut rng) as usize).unwrap_or(0)
        } else {
            0
        };
        let size = (1 + extra).min(cfg.max_size).min(cfg.items);
        let mut u = rng.random::<f64>() * group_total;
        let mut home = 0;
        for (g, &w) in group_weight.iter().enumerate() {
            home = g;
            u -= w;
            if u < 0.0 {
                break;
            }
        }
        let mut basket: Vec<usize> = Vec::with_capacity(size);
        while basket.len() < size {
            let home_full = members[home].iter().all(|i| basket.contains(i));
            let item = if !home_full && rng.random::<f64>() < cfg.cohesion {
                pick(&mut rng, &members[home], group_weight[home])
            } else {
                pick(&mut rng, &all, total_pop)
            };
            if !basket.contains(&item) {
                basket.push(item);
            }
        }
        transactions.push(basket);
    }
    Ok(TransactionSet { items, transactions })
}
