from so2conv.harness.cli import main

main()
