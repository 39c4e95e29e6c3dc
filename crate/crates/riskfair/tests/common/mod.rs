//! County-shaped fixtures built from the bundled schema.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use riskfair::schema::{Role, TableSchema, UnitClass};

/// splitmix64; enough randomness for fixtures without a dependency.
pub struct Mix(u64);

impl Mix {
    pub fn new(seed: u64) -> Self {
        Mix(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn value(unit: Option<UnitClass>, u: f64) -> f64 {
    match unit {
        Some(UnitClass::Percent) => 5.0 + 85.0 * u,
        Some(UnitClass::Usd) => 20_000.0 + 60_000.0 * u,
        Some(UnitClass::Count) => (1000.0 * u).round(),
        _ => 10.0 * u,
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// County and domain-knowledge tables with `n` rows. The target rises with
/// the first explanatory column and with the domain-knowledge columns, so
/// every model has some signal to find.
pub fn county_tables(n: usize, seed: u64) -> (String, String) {
    let schema = TableSchema::builtin();
    let base: Vec<_> = schema
        .columns
        .iter()
        .filter(|c| matches!(c.role, Role::Key | Role::State | Role::County | Role::Explanatory | Role::Target))
        .collect();
    let dk: Vec<_> = schema.with_role(Role::DomainKnowledge).collect();
    let mut rng = Mix::new(seed);
    let mut county = base.iter().map(|c| c.header.clone()).collect::<Vec<_>>().join(",") + "\n";
    let mut dk_table =
        format!("{},{}\n", schema.key().header, dk.iter().map(|c| c.header.clone()).collect::<Vec<_>>().join(","));
    for i in 0..n {
        let fips = format!("{:05}", 1001 + i);
        let dk_u: Vec<f64> = dk.iter().map(|_| rng.unit()).collect();
        let driver = rng.unit();
        let mut row = Vec::new();
        for c in &base {
            row.push(match c.role {
                Role::Key => fips.clone(),
                Role::State => format!("State {}", i % 7),
                Role::County => format!("County {i}"),
                Role::Target => {
                    let signal = 0.6 * driver + 0.4 * dk_u.iter().sum::<f64>() / dk_u.len() as f64;
                    format!("{}", round2(5.0 + 40.0 * (0.8 * signal + 0.2 * rng.unit())))
                }
                _ if c.field == schema.explanatory_fields()[0] => format!("{}", round2(value(c.unit, driver))),
                _ => format!("{}", round2(value(c.unit, rng.unit()))),
            });
        }
        county.push_str(&row.join(","));
        county.push('\n');
        let dk_row: Vec<String> = dk.iter().zip(&dk_u).map(|(c, &u)| format!("{}", round2(value(c.unit, u)))).collect();
        dk_table.push_str(&format!("{fips},{}\n", dk_row.join(",")));
    }
    (county, dk_table)
}

/// Writes the fixture tables into `dir`; returns (county, dk) paths.
pub fn write_county_tables(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let (county, dk) = county_tables(n, seed);
    let cp = dir.join("county.csv");
    let dp = dir.join("dk.csv");
    std::fs::write(&cp, county).unwrap();
    std::fs::write(&dp, dk).unwrap();
    (cp, dp)
}

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
pub fn run<S: AsRef<str>>(args: &[S]) -> (i32, String, String) {
    let mut argv = vec!["riskfair".to_string()];
    argv.extend(args.iter().map(|a| a.as_ref().to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = riskfair::cli::dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}
