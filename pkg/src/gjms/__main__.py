from gjms.cli import main

main()
