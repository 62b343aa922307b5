use clap::Parser;
use sl_iosp_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&cli.command));
}
