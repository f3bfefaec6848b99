//! Built-in example networks with maximally entangled resources.

use super::{epr_max, ghz_max, NetworkTopology, Resource, Source};
use crate::error::{invalid, Result};

/// Catalog entry describing one gallery network.
#[derive(Clone, Debug, PartialEq)]
pub struct GalleryEntry {
    pub name: &'static str,
    /// Smallest accepted size parameter, or `None` for fixed networks.
    pub min_n: Option<usize>,
    pub description: &'static str,
    /// True when the edge set is chosen to reproduce published counts rather
    /// than copied from an explicit edge list.
    pub reconstructed: bool,
}

const CATALOG: &[GalleryEntry] = &[
    GalleryEntry {
        name: "chain",
        min_n: Some(2),
        description: "n parties in a line, EPR pair between neighbours",
        reconstructed: false,
    },
    GalleryEntry {
        name: "cycle",
        min_n: Some(3),
        description: "n parties in a ring, EPR pair between neighbours",
        reconstructed: false,
    },
    GalleryEntry {
        name: "hybrid-star",
        min_n: Some(3),
        description: "hub H with EPR pairs to L1..L3, a GHZ-4 on (L4, H, A1, A2), EPR ring on A1..An",
        reconstructed: true,
    },
    GalleryEntry {
        name: "fig-s2",
        min_n: None,
        description: "5 parties, 7 EPR sources; degrees (2,3,3,3,3); independent pair {A1, A2}",
        reconstructed: true,
    },
    GalleryEntry {
        name: "two-loop",
        min_n: None,
        description: "GHZ-4 on P1..P4 closed into two loops through Q and R by 4 EPR pairs",
        reconstructed: true,
    },
    GalleryEntry {
        name: "butterfly",
        min_n: None,
        description: "GHZ-4 on A,B,C,D with EPR wings to W1, W2 and a tail to X",
        reconstructed: true,
    },
    GalleryEntry {
        name: "hybrid-multiloop",
        min_n: Some(2),
        description: "GHZ-n on P1..Pn and on Q1..Qn joined by EPR pairs Pi-Qi (EPR instead of GHZ when n = 2)",
        reconstructed: true,
    },
    GalleryEntry {
        name: "boat",
        min_n: None,
        description: "12 parties, 4 GHZ-3 and 8 EPR sources",
        reconstructed: true,
    },
    GalleryEntry {
        name: "triangle",
        min_n: None,
        description: "3 parties, EPR pairs on a ring",
        reconstructed: false,
    },
    GalleryEntry {
        name: "tri-ghz",
        min_n: None,
        description: "two overlapping GHZ-3 and one EPR pair on 4 parties",
        reconstructed: true,
    },
    GalleryEntry {
        name: "symmetric-cycle",
        min_n: None,
        description: "one GHZ-4 and two GHZ-3 on 4 parties",
        reconstructed: true,
    },
    GalleryEntry {
        name: "door",
        min_n: None,
        description: "three GHZ-4 on 6 parties, every pair of parties shares a source",
        reconstructed: true,
    },
];

/// All gallery entries.
pub fn gallery_catalog() -> &'static [GalleryEntry] {
    CATALOG
}

/// Splits `chain(5)` or `chain:5` into a name and optional parameter.
fn split_name(spec: &str) -> Result<(&str, Option<usize>)> {
    let spec = spec.trim();
    let (name, arg) = if let Some(open) = spec.find('(') {
        let Some(inner) = spec[open + 1..].strip_suffix(')') else {
            return invalid(format!("malformed gallery name '{spec}'"));
        };
        (&spec[..open], Some(inner))
    } else if let Some((name, arg)) = spec.split_once(':') {
        (name, Some(arg))
    } else {
        (spec, None)
    };
    let n = match arg {
        Some(a) => Some(
            a.trim()
                .parse::<usize>()
                .map_err(|_| crate::Error::Invalid(format!("bad size parameter in '{spec}'")))?,
        ),
        None => None,
    };
    Ok((name.trim(), n))
}

struct Builder {
    parties: Vec<String>,
    sources: Vec<Source>,
}

impl Builder {
    fn new<S: ToString>(parties: impl IntoIterator<Item = S>) -> Self {
        Self {
            parties: parties.into_iter().map(|p| p.to_string()).collect(),
            sources: Vec::new(),
        }
    }

    fn add(&mut self, resource: Resource, to: &[&str]) {
        let id = format!("S{}", self.sources.len() + 1);
        self.sources.push(Source {
            id,
            resource,
            recipients: to.iter().map(|s| s.to_string()).collect(),
        });
    }

    fn epr(&mut self, a: &str, b: &str) {
        self.add(epr_max(), &[a, b]);
    }

    fn ghz(&mut self, to: &[&str]) {
        self.add(ghz_max(to.len()), to);
    }

    fn build(self) -> Result<NetworkTopology> {
        NetworkTopology::new(self.parties, self.sources)
    }
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Gallery network by name, e.g. `chain(4)`, `cycle:6`, `butterfly`.
pub fn gallery(spec: &str) -> Result<NetworkTopology> {
    let (name, n) = split_name(spec)?;
    let Some(entry) = CATALOG.iter().find(|e| e.name == name) else {
        return invalid(format!("unknown gallery network '{name}'"));
    };
    let n = match (entry.min_n, n) {
        (Some(min), Some(n)) if n < min => {
            return invalid(format!("{name} needs n >= {min}, got {n}"))
        }
        (Some(_), Some(n)) => n,
        (Some(min), None) => {
            return invalid(format!("{name} needs a size parameter, e.g. {name}({min})"))
        }
        (None, Some(_)) => return invalid(format!("{name} takes no size parameter")),
        (None, None) => 0,
    };
    match name {
        "chain" => {
            let names = numbered("A", n);
            let mut b = Builder::new(&names);
            for w in names.windows(2) {
                b.epr(&w[0], &w[1]);
            }
            b.build()
        }
        "cycle" => {
            let names = numbered("A", n);
            let mut b = Builder::new(&names);
            for i in 0..n {
                b.epr(&names[i], &names[(i + 1) % n]);
            }
            b.build()
        }
        "hybrid-star" => {
            let a = numbered("A", n);
            let mut parties: Vec<String> = ["H", "L1", "L2", "L3", "L4"].map(String::from).to_vec();
            parties.extend(a.iter().cloned());
            let mut b = Builder::new(parties);
            for l in ["L1", "L2", "L3"] {
                b.epr("H", l);
            }
            b.ghz(&["L4", "H", &a[0], &a[1]]);
            for i in 1..n - 1 {
                b.epr(&a[i], &a[i + 1]);
            }
            b.epr(&a[n - 1], &a[0]);
            b.build()
        }
        "fig-s2" => {
            let mut b = Builder::new(numbered("A", 5));
            for (x, y) in [
                ("A1", "A3"),
                ("A2", "A3"),
                ("A2", "A4"),
                ("A4", "A5"),
                ("A1", "A4"),
                ("A2", "A5"),
                ("A3", "A5"),
            ] {
                b.epr(x, y);
            }
            b.build()
        }
        "two-loop" => {
            let mut b = Builder::new(["P1", "P2", "P3", "P4", "Q", "R"]);
            b.ghz(&["P1", "P2", "P3", "P4"]);
            b.epr("P1", "Q");
            b.epr("Q", "P2");
            b.epr("P3", "R");
            b.epr("R", "P4");
            b.build()
        }
        "butterfly" => {
            let mut b = Builder::new(["A", "B", "C", "D", "W1", "W2", "X"]);
            b.ghz(&["A", "B", "C", "D"]);
            b.epr("A", "W1");
            b.epr("B", "W1");
            b.epr("C", "W2");
            b.epr("D", "W2");
            b.epr("A", "X");
            b.build()
        }
        "hybrid-multiloop" => {
            let p = numbered("P", n);
            let q = numbered("Q", n);
            let mut b = Builder::new(p.iter().chain(q.iter()));
            for group in [&p, &q] {
                let refs: Vec<&str> = group.iter().map(String::as_str).collect();
                if n == 2 {
                    b.epr(refs[0], refs[1]);
                } else {
                    b.ghz(&refs);
                }
            }
            for i in 0..n {
                b.epr(&p[i], &q[i]);
            }
            b.build()
        }
        "boat" => {
            let mut b = Builder::new([
                "K1", "K2", "K3", "K4", "M", "B1", "B2", "B3", "B4", "S1", "S2", "S3",
            ]);
            b.ghz(&["K1", "K2", "B1"]);
            b.ghz(&["K2", "K3", "B2"]);
            b.ghz(&["K3", "K4", "B3"]);
            b.ghz(&["K4", "K1", "B4"]);
            for (x, y) in [
                ("M", "K1"),
                ("M", "K3"),
                ("S1", "K2"),
                ("S2", "K4"),
                ("S3", "M"),
                ("B1", "B2"),
                ("B3", "B4"),
                ("S1", "S2"),
            ] {
                b.epr(x, y);
            }
            b.build()
        }
        "triangle" => {
            let mut b = Builder::new(["A1", "A2", "A3"]);
            b.epr("A1", "A2");
            b.epr("A2", "A3");
            b.epr("A3", "A1");
            b.build()
        }
        "tri-ghz" => {
            let mut b = Builder::new(["P1", "P2", "P3", "P4"]);
            b.ghz(&["P1", "P2", "P3"]);
            b.ghz(&["P2", "P3", "P4"]);
            b.epr("P1", "P4");
            b.build()
        }
        "symmetric-cycle" => {
            let mut b = Builder::new(["P1", "P2", "P3", "P4"]);
            b.ghz(&["P1", "P2", "P3", "P4"]);
            b.ghz(&["P1", "P2", "P3"]);
            b.ghz(&["P3", "P4", "P1"]);
            b.build()
        }
        "door" => {
            let mut b = Builder::new(numbered("P", 6));
            b.ghz(&["P1", "P2", "P3", "P4"]);
            b.ghz(&["P1", "P2", "P5", "P6"]);
            b.ghz(&["P3", "P4", "P5", "P6"]);
            b.build()
        }
        _ => unreachable!("catalog and builder out of sync"),
    }
}
