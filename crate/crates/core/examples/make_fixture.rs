//! Write the demo fixture (schema, CSV tables, database, templates, corpus).
//!
//! ```text
//! cargo run -p medsql --example make_fixture -- target/fixture 1000
//! ```

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let n = args.next().map(|s| s.parse().expect("corpus size must be a number")).unwrap_or(1000);
    match medsql::fixture::write_fixture(&dir, n) {
        Ok(f) => println!("wrote {} (corpus {}, database {})", f.dir.display(), f.corpus.display(), f.db.display()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
