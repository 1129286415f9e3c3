//! Writes the example data set under the given directory (default `data`).
//!
//! ```text
//! cargo run -p hpdro --example gen_data -- data
//! ```

use std::path::{Path, PathBuf};

use hpdro::config::{write_atomic, write_errors_csv, write_forecast_csv, write_houses, write_price_csv};
use hpdro::model::ZoneSpec;
use hpdro::synthetic;
use hpdro::thermal::HouseSpec;

const HISTORY_SEED: u64 = 2024;
const HORIZON: usize = 48;
const SLOT_HOURS: f64 = 0.5;

const DESK_MANIFEST: &str = r#"# Five houses on one feeder, a winter day in 30 minute slots.
houses = "../houses.toml"
forecast = "forecast.csv"
price = "price.csv"
errors = "errors.csv"
variant = "kdea-dro"
horizon = 48
slot_hours = 0.5
out_dir = "out"

[[zone]]
name = "feeder"
houses = [1, 2, 3, 4, 5]
trans_capacity_kw = 60.0
psi_per_kw = 10.0

[risk]
beta_power = 0.1
beta_temp = 0.1
radius_mode = "constant"

[solver]
gap = 0.01
node_limit = 400

[evaluation]
trials = 200
seed = 7
"#;

fn write(path: &Path, text: &str) {
    write_atomic(path, text.as_bytes()).unwrap_or_else(|e| panic!("{e}"));
    println!("wrote {}", path.display());
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    write(&root.join("houses.toml"), &write_houses(&HouseSpec::reference_fleet()));

    let zones = vec![ZoneSpec {
        name: "feeder".into(),
        houses: vec![1, 2, 3, 4, 5],
        trans_capacity: 60.0,
        psi: 10.0,
    }];
    let desk = root.join("desk");
    let forecast = synthetic::forecast(&zones, HORIZON, SLOT_HOURS);
    write(&desk.join("forecast.csv"), &write_forecast_csv(&forecast, &zones));
    write(&desk.join("price.csv"), &write_price_csv(&forecast.price));
    let mut histories = synthetic::temperature_histories(HORIZON, HISTORY_SEED);
    histories.extend(synthetic::power_histories(&zones, HORIZON, HISTORY_SEED));
    write(&desk.join("errors.csv"), &write_errors_csv(&histories));
    write(&desk.join("manifest.toml"), DESK_MANIFEST);
}
